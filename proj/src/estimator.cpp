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

#include "greybox/estimator.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace greybox {

using sdp::AffineExpr;
using sdp::BlockLmi;
using sdp::Sense;

bool FilterDesign::certified(double rel) const {
    return spectral_abscissa_N < 0.0 && norms.hinf_value < lambda_star * (1.0 + rel) &&
           norms.h2_value < gamma_star * (1.0 + rel) && residuals.all_satisfied();
}

bool is_detectable(const Matrix& A, const Matrix& C, double tol) {
    const auto n = A.rows();
    const double scale = std::max(1.0, A.norm() + C.norm());
    Eigen::ComplexEigenSolver<Matrix> es(A, false);
    std::vector<std::complex<double>> candidates;
    // Integrator chains give clustered eigenvalues at the origin that the
    // eigensolver scatters slightly; test the origin itself as well.
    candidates.emplace_back(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto s = es.eigenvalues()(i);
        if (s.real() >= -1e-8 * scale && std::abs(s) > 1e-6 * scale) candidates.push_back(s);
    }
    Eigen::MatrixXcd pbh(n + C.rows(), n);
    for (const auto& s : candidates) {
        pbh.topRows(n) = A.cast<std::complex<double>>() - s * Eigen::MatrixXcd::Identity(n, n);
        pbh.bottomRows(C.rows()) = C.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
        if (svd.singularValues()(n - 1) <= tol * scale) {
            // The origin is only a mode when A is singular.
            if (s == std::complex<double>(0.0, 0.0)) {
                Eigen::JacobiSVD<Matrix> sa(A);
                if (sa.singularValues()(n - 1) > tol * scale) continue;
            }
            return false;
        }
    }
    return true;
}

namespace {

struct Program {
    sdp::Solution sol;
    sdp::Variable Pi, F, H, Z, lambda, gamma;
};

Program solve_prop1(const AugmentedSystem& aug, double epsilon, double gamma_max, const FilterOptions& opts) {
    const int na = aug.n_a;
    const int m = static_cast<int>(aug.C_a.rows());
    const int nw = static_cast<int>(aug.B_omega_a.cols());
    const int nd = static_cast<int>(aug.C_bar_a.rows());
    const int mn = static_cast<int>(aug.D_nu.cols());

    sdp::Problem p(opts.strict_shift);
    Program g;
    g.Pi = p.symmetric("Pi", na);
    g.F = p.matrix("F", na, m);
    g.H = p.matrix("H", na, m);
    g.Z = p.symmetric("Z", nd);
    g.lambda = p.scalar("lambda");
    g.gamma = p.scalar("gamma");
    p.minimize(AffineExpr(g.lambda));

    const AffineExpr Pi(g.Pi), F(g.F), H(g.H);
    const AffineExpr half = Pi * aug.A_a + F * Matrix(aug.C_a * aug.A_a) - H * aug.C_a;
    const AffineExpr Sbar = half + half.transpose();
    const Matrix Ina = Matrix::Identity(na, na);

    p.add("iss", Sbar + epsilon * Ina, Sense::NegativeSemidefinite);

    BlockLmi hinf({na, nw, nd});
    hinf.set(0, 0, Sbar);
    hinf.set(0, 1, -1.0 * (Pi * aug.B_omega_a + F * Matrix(aug.C_a * aug.B_omega_a)));
    hinf.set(0, 2, AffineExpr::constant(aug.C_bar_a.transpose()));
    hinf.set(1, 1, -1.0 * AffineExpr::scaled_identity(g.lambda, nw));
    hinf.set(2, 2, -1.0 * AffineExpr::scaled_identity(g.lambda, nd));
    p.add("hinf", hinf, Sense::NegativeDefinite);

    BlockLmi h2({na, mn, mn});
    h2.set(0, 0, Sbar);
    h2.set(0, 1, H * aug.D_nu);
    h2.set(0, 2, -1.0 * (F * aug.D_nu));
    h2.set(1, 1, -1.0 * AffineExpr::scaled_identity(g.gamma, mn));
    h2.set(2, 2, -1.0 * AffineExpr::scaled_identity(g.gamma, mn));
    p.add("h2", h2, Sense::NegativeDefinite);

    BlockLmi coupling({na, nd});
    coupling.set(0, 0, Pi);
    coupling.set(0, 1, AffineExpr::constant(aug.C_bar_a.transpose()));
    coupling.set(1, 1, g.Z);
    p.add("coupling", coupling, Sense::PositiveDefinite);

    p.add("Pi", g.Pi, Sense::PositiveDefinite);
    p.add("gamma-trace", AffineExpr(g.gamma) - sdp::trace(g.Z), Sense::PositiveDefinite);
    p.add("gamma", g.gamma, Sense::PositiveDefinite);
    p.add("lambda", g.lambda, Sense::PositiveDefinite);
    p.add("gamma-max", AffineExpr::constant(Matrix::Constant(1, 1, gamma_max)) - AffineExpr(g.gamma),
          Sense::PositiveSemidefinite);

    if (opts.on_problem) opts.on_problem("prop1", p);
    g.sol = sdp::solve(p, opts.solver);
    return g;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

FilterDesign design_filter(const AugmentedSystem& aug, double epsilon, double gamma_max, const FilterOptions& opts) {
    if (!(epsilon > 0.0) || !(gamma_max > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "design_filter: epsilon and gamma_max must be positive");
    }
    if (!is_detectable(aug.A_a, aug.C_a)) {
        throw Error(ErrorKind::InvalidArgument,
                    "design_filter: (A_a, C_a) is not detectable; the uncertainty chain of order r = " +
                        std::to_string(aug.r) + " is not observable through C");
    }

    const Program g = solve_prop1(aug, epsilon, gamma_max, opts);
    if (g.sol.status == sdp::Status::Infeasible) {
        // Decide whether the H2 cap is what binds.
        const Program relaxed = solve_prop1(aug, epsilon, 1e4 * gamma_max, opts);
        std::string why;
        if (relaxed.sol.optimal()) {
            why = "the H2 cap binds: feasible with gamma = " + fmt(relaxed.sol.scalar(relaxed.gamma)) +
                  " > gamma_max = " + fmt(gamma_max) + "; increase gamma_max or reduce epsilon";
        } else if (relaxed.sol.status == sdp::Status::Infeasible) {
            why = "infeasible even with gamma_max = " + fmt(1e4 * gamma_max) + "; reduce epsilon (" + fmt(epsilon) +
                  ") or the order r (" + std::to_string(aug.r) + ")";
        } else {
            why = "likely binding: gamma_max = " + fmt(gamma_max) + " or epsilon = " + fmt(epsilon);
        }
        throw Error(ErrorKind::Infeasible, "design_filter: program infeasible; " + why);
    }
    if (!g.sol.optimal()) {
        throw Error(ErrorKind::NumericalFailure, "design_filter: solver failed: " + g.sol.message);
    }

    Eigen::LLT<Matrix> llt(0.5 * (g.sol.value(g.Pi) + g.sol.value(g.Pi).transpose()));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "design_filter: certificate Pi is not positive definite");
    }
    FilterDesign fd = assemble_filter(aug, llt.solve(g.sol.value(g.F)), llt.solve(g.sol.value(g.H)),
                                      g.sol.value(g.Pi), g.sol.value(g.Z), g.sol.scalar(g.lambda),
                                      g.sol.scalar(g.gamma), epsilon, gamma_max, opts.verify_tol);
    fd.iterations = g.sol.iterations;
    fd.message = g.sol.message;
    return fd;
}

FilterDesign assemble_filter(const AugmentedSystem& aug, const Matrix& E, const Matrix& K, const Matrix& Pi,
                             const Matrix& Z, double lambda, double gamma, double epsilon, double gamma_max,
                             double verify_tol) {
    const int na = aug.n_a;
    const auto m = aug.C_a.rows();
    if (E.rows() != na || E.cols() != m || K.rows() != na || K.cols() != m || Pi.rows() != na ||
        Pi.cols() != na || Z.rows() != aug.C_bar_a.rows() || Z.cols() != aug.C_bar_a.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "assemble_filter: gains or certificate do not match the plant");
    }
    FilterDesign fd;
    fd.aug = aug;
    fd.epsilon = epsilon;
    fd.gamma_max = gamma_max;
    fd.E = E;
    fd.K = K;
    fd.Pi = 0.5 * (Pi + Pi.transpose());
    fd.Z = Z;
    fd.lambda_star = lambda;
    fd.gamma_star = gamma;

    const Matrix I = Matrix::Identity(na, na);
    const Matrix Im = Matrix::Identity(m, m);
    fd.M = I + fd.E * aug.C_a;
    fd.N = fd.M * aug.A_a - fd.K * aug.C_a;
    fd.G = fd.M * aug.B_ua;
    fd.L = fd.K * (Im + aug.C_a * fd.E) - fd.M * aug.A_a * fd.E;
    fd.B_nu_a.resize(na, 2 * aug.D_nu.cols());
    fd.B_nu_a << fd.K * aug.D_nu, -fd.E * aug.D_nu;

    Matrix drive(na, aug.B_omega_a.cols() + 2 * aug.D_nu.cols());
    drive << fd.M * aug.B_omega_a, -fd.K * aug.D_nu, fd.E * aug.D_nu;
    fd.iss_gain_bound = 2.0 * (fd.Pi * drive).operatorNorm() / epsilon;

    fd.spectral_abscissa_N = spectral_abscissa(fd.N);
    if (fd.spectral_abscissa_N < 0.0) {
        fd.norms = norm_report(fd.N, fd.error_input_omega(), aug.C_bar_a, fd.B_nu_a, aug.C_bar_a);
    }
    const FilterArtifacts art{aug.A_a, aug.B_omega_a, aug.C_a, aug.C_bar_a, aug.D_nu, fd.E, fd.K, fd.Pi, fd.Z,
                              lambda, gamma, epsilon, gamma_max};
    fd.residuals = verify_certificate(art, verify_tol);
    return fd;
}

std::vector<double> default_gamma_max_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 16; ++i) g.push_back(std::pow(10.0, -2.0 + 0.25 * i));
    return g;
}

FilterDesign design_filter_sweep(const AugmentedSystem& aug, double epsilon, const std::vector<double>& grid,
                                 const FilterOptions& opts, std::vector<GammaMaxTrial>* trials) {
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "design_filter_sweep: empty gamma_max grid");
    std::optional<FilterDesign> best;
    std::string last_error;
    for (double gm : grid) {
        GammaMaxTrial tr;
        tr.gamma_max = gm;
        try {
            FilterDesign fd = design_filter(aug, epsilon, gm, opts);
            tr.feasible = true;
            tr.lambda_star = fd.lambda_star;
            tr.message = fd.message;
            if (!best || fd.lambda_star < best->lambda_star * (1.0 - 1e-9)) best = std::move(fd);
        } catch (const Error& e) {
            // Detectability does not depend on gamma_max.
            if (e.kind() == ErrorKind::InvalidArgument) throw;
            tr.message = e.what();
            last_error = e.what();
        }
        if (trials) trials->push_back(tr);
    }
    if (!best) {
        throw Error(ErrorKind::Infeasible, "design_filter_sweep: no feasible gamma_max on the grid; last: " + last_error);
    }
    return std::move(*best);
}

FilterState make_filter_state(const FilterDesign& fd, const Vector& z, const Vector& y_s, double t) {
    if (z.size() != fd.aug.n_a || y_s.size() != fd.aug.C_a.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "make_filter_state: z must have " + std::to_string(fd.aug.n_a) +
                                                      " entries and y_s " + std::to_string(fd.aug.C_a.rows()));
    }
    FilterState s;
    s.t = t;
    s.z = z;
    s.x_hat_a = z - fd.E * y_s;
    s.eta_hat = fd.aug.C_bar_1 * s.x_hat_a;
    s.x_hat_s = fd.aug.C_bar_2 * s.x_hat_a;
    return s;
}

FilterState step_filter(const FilterDesign& fd, const FilterState& s, const FilterStepInput& in, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "step_filter: dt must be positive");
    const auto f = [&](const Vector& z, const Vector& u, const Vector& y) -> Vector {
        Vector d = fd.N * z + fd.L * y;
        if (fd.G.cols() > 0) d += fd.G * u;
        return d;
    };
    const Vector k1 = f(s.z, in.u0, in.y0);
    const Vector k2 = f(s.z + 0.5 * dt * k1, in.u_mid, in.y_mid);
    const Vector k3 = f(s.z + 0.5 * dt * k2, in.u_mid, in.y_mid);
    const Vector k4 = f(s.z + dt * k3, in.u1, in.y1);
    const Vector z = s.z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite()) {
        throw Error(ErrorKind::NumericalFailure, "step_filter: filter state diverged at t = " + fmt(s.t + dt) + " s");
    }
    return make_filter_state(fd, z, in.y1, s.t + dt);
}

FilterState step_filter(const FilterDesign& fd, const FilterState& s, const Vector& u, const Vector& y_s, double dt) {
    return step_filter(fd, s, FilterStepInput{u, y_s, u, y_s, u, y_s}, dt);
}

}  // namespace greybox
