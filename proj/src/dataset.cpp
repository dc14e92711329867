/*
 Copyright 2026 The greybox Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "greybox/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "greybox/model.hpp"

namespace greybox {

namespace {

void check_sample(const Sample& s, const Sample& first) {
    if (s.x_hat.size() != first.x_hat.size() || s.u.size() != first.u.size() ||
        s.eta_hat.size() != first.eta_hat.size()) {
        throw Error(ErrorKind::DimensionMismatch, "samples have inconsistent dimensions");
    }
    if (!s.x_hat.allFinite() || !s.u.allFinite() || !s.eta_hat.allFinite() || !std::isfinite(s.t)) {
        throw Error(ErrorKind::InvalidArgument,
                    "non-finite entry in sample at t = " + std::to_string(s.t));
    }
}

}  // namespace

Matrix psd_factor(const Matrix& D) {
    const auto k = D.rows();
    if (k == 0) return Matrix::Zero(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(D);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "eigendecomposition of the data matrix failed");
    }
    const Vector lam = es.eigenvalues().cwiseMax(0.0);
    const double lam_max = lam.maxCoeff();
    const double cutoff = static_cast<double>(k) * std::numeric_limits<double>::epsilon() * lam_max;

    std::vector<int> keep;
    for (int i = static_cast<int>(k) - 1; i >= 0; --i) {
        if (lam(i) > cutoff) keep.push_back(i);
    }
    Matrix F(static_cast<Eigen::Index>(keep.size()), k);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        Vector row = std::sqrt(lam(keep[r])) * es.eigenvectors().col(keep[r]);
        // Sign convention: largest-magnitude entry positive.
        Eigen::Index imax = 0;
        row.cwiseAbs().maxCoeff(&imax);
        if (row(imax) < 0) row = -row;
        F.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return F;
}

DataMatrix build_data_matrix(std::span<const Sample> samples, const Matrix& lift_map) {
    if (samples.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot build a data matrix from an empty sample list");
    }
    const Sample& first = samples.front();
    const bool lifted = lift_map.size() > 0;
    if (lifted && lift_map.cols() != first.eta_hat.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "lift map " + shape_str(lift_map) + " does not accept eta_hat of length " +
                        std::to_string(first.eta_hat.size()));
    }

    DataMatrix dm;
    dm.n = static_cast<int>(first.x_hat.size());
    dm.l = static_cast<int>(first.u.size());
    dm.q = lifted ? static_cast<int>(lift_map.rows()) : static_cast<int>(first.eta_hat.size());
    dm.lifted = lifted;
    dm.sample_count = static_cast<int>(samples.size());

    const int nd = dm.n_d();
    dm.D = Matrix::Zero(nd, nd);
    Vector d(nd);
    for (const Sample& s : samples) {
        check_sample(s, first);
        d.head(dm.n) = s.x_hat;
        d.segment(dm.n, dm.l) = s.u;
        if (lifted) {
            d.tail(dm.q) = lift_map * s.eta_hat;
        } else {
            d.tail(dm.q) = s.eta_hat;
        }
        dm.D.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    dm.D = dm.D.selfadjointView<Eigen::Lower>();
    dm.D_factor = psd_factor(dm.D);
    return dm;
}

DataMatrix build_data_matrix(std::span<const Sample> samples, const LtiSystem& sys, bool lift) {
    return build_data_matrix(samples, lift ? sys.S_eta() : Matrix());
}

Matrix residual_map(const DataMatrix& dm, const Matrix& Theta_l, const Matrix& B_l) {
    if (Theta_l.rows() != dm.q || Theta_l.cols() != dm.n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "Theta_l is " + shape_str(Theta_l) + " but the data layout needs " +
                        std::to_string(dm.q) + "x" + std::to_string(dm.n));
    }
    if (B_l.rows() != dm.q || B_l.cols() != dm.l) {
        throw Error(ErrorKind::DimensionMismatch,
                    "B_l is " + shape_str(B_l) + " but the data layout needs " + std::to_string(dm.q) +
                        "x" + std::to_string(dm.l));
    }
    Matrix T(dm.q, dm.n_d());
    T << Theta_l, B_l, -Matrix::Identity(dm.q, dm.q);
    return T;
}

double cost_J(const DataMatrix& dm, const Matrix& Theta_l, const Matrix& B_l) {
    const Matrix T = residual_map(dm, Theta_l, B_l);
    return std::max(0.0, (T * dm.D * T.transpose()).trace());
}

std::vector<Sample> discard_transient(std::span<const Sample> samples, double t_min) {
    std::vector<Sample> out;
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
                 [t_min](const Sample& s) { return s.t >= t_min; });
    return out;
}

void write_samples_csv(const std::string& path, std::span<const Sample> samples) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    if (samples.empty()) {
        os << "t\n";
        return;
    }
    const Sample& f = samples.front();
    os << "t";
    for (Eigen::Index i = 0; i < f.x_hat.size(); ++i) os << ",xhat_" << i + 1;
    for (Eigen::Index i = 0; i < f.u.size(); ++i) os << ",u_" << i + 1;
    for (Eigen::Index i = 0; i < f.eta_hat.size(); ++i) os << ",etahat_" << i + 1;
    os << "\n" << std::setprecision(17);
    for (const Sample& s : samples) {
        os << s.t;
        for (Eigen::Index i = 0; i < s.x_hat.size(); ++i) os << "," << s.x_hat(i);
        for (Eigen::Index i = 0; i < s.u.size(); ++i) os << "," << s.u(i);
        for (Eigen::Index i = 0; i < s.eta_hat.size(); ++i) os << "," << s.eta_hat(i);
        os << "\n";
    }
}

std::vector<Sample> read_samples_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::Io, "'" + path + "' is empty");

    int nx = 0, nu = 0, ne = 0;
    {
        std::stringstream ss(line);
        std::string col;
        int idx = 0;
        while (std::getline(ss, col, ',')) {
            col.erase(std::remove_if(col.begin(), col.end(), ::isspace), col.end());
            if (idx == 0 && col != "t") throw Error(ErrorKind::Io, "dataset header must start with 't'");
            if (col.rfind("xhat_", 0) == 0) ++nx;
            else if (col.rfind("u_", 0) == 0) ++nu;
            else if (col.rfind("etahat_", 0) == 0) ++ne;
            else if (idx != 0) throw Error(ErrorKind::Io, "unexpected dataset column '" + col + "'");
            ++idx;
        }
    }

    std::vector<Sample> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (static_cast<int>(vals.size()) != 1 + nx + nu + ne) {
            throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": wrong column count");
        }
        Sample s;
        s.t = vals[0];
        s.x_hat = Eigen::Map<Vector>(vals.data() + 1, nx);
        s.u = Eigen::Map<Vector>(vals.data() + 1 + nx, nu);
        s.eta_hat = Eigen::Map<Vector>(vals.data() + 1 + nx + nu, ne);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace greybox
