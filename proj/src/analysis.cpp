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

#include "greybox/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace greybox {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

double spectral_abscissa(const Matrix& A) {
    if (A.rows() != A.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "spectral abscissa of a non-square matrix " + shape_str(A));
    }
    if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "eigenvalue computation failed");
    return es.eigenvalues().real().maxCoeff();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
    const auto n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "Lyapunov equation: A " + shape_str(A) + ", Q " + shape_str(Q));
    }
    if (n == 0) return Matrix::Zero(0, 0);
    // A = U T U^*, T upper triangular. Solve T Y + Y T^* = -U^* Q U column by column
    // from the last column: (T + conj(t_jj) I) y_j = rhs_j - sum_{k>j} conj(t_jk) y_k.
    Eigen::ComplexSchur<Matrix> schur(A);
    const CMatrix& T = schur.matrixT();
    const CMatrix& U = schur.matrixU();
    const CMatrix Qt = -(U.adjoint() * Q.cast<Complex>() * U);
    CMatrix Y = CMatrix::Zero(n, n);
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        Eigen::VectorXcd rhs = Qt.col(j);
        for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
        CMatrix lhs = T;
        lhs.diagonal().array() += std::conj(T(j, j));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(lhs(i, i)) < 1e-14 * scale) {
                throw Error(ErrorKind::NumericalFailure, "Lyapunov equation is singular (eigenvalues sum to zero)");
            }
        }
        Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
    }
    Matrix X = (U * Y * U.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

namespace {

CMatrix frequency_response(const Matrix& A, const Matrix& B, const Matrix& C, double w) {
    CMatrix M = -A.cast<Complex>();
    M.diagonal().array() += Complex(0.0, w);
    return C.cast<Complex>() * M.partialPivLu().solve(B.cast<Complex>());
}

void require_hurwitz(const Matrix& A, const char* what) {
    if (A.rows() > 0 && spectral_abscissa(A) >= 0.0) {
        throw Error(ErrorKind::InvalidArgument, std::string(what) + ": system matrix is not Hurwitz");
    }
}

void check_realization(const Matrix& A, const Matrix& B, const Matrix& C) {
    require_shape(A.rows() == A.cols(), "realization: A must be square", A, A);
    require_shape(B.rows() == A.rows(), "realization: B rows vs A", B, A);
    require_shape(C.cols() == A.rows(), "realization: C cols vs A", C, A);
}

}  // namespace

double sigma_max_at(const Matrix& A, const Matrix& B, const Matrix& C, double w) {
    const CMatrix G = frequency_response(A, B, C, w);
    if (G.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(G);
    return svd.singularValues()(0);
}

namespace {

// True when the Hamiltonian for level gamma has an eigenvalue on the imaginary
// axis; fills the corresponding nonnegative frequencies.
bool hamiltonian_has_imaginary(const Matrix& A, const Matrix& B, const Matrix& C, double gamma,
                               std::vector<double>* freqs) {
    const auto n = A.rows();
    Matrix H(2 * n, 2 * n);
    H << A, (B * B.transpose()) / (gamma * gamma), -(C.transpose() * C), -A.transpose();
    Eigen::EigenSolver<Matrix> es(H, false);
    const double hnorm = std::max(1.0, H.cwiseAbs().rowwise().sum().maxCoeff());
    bool found = false;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (std::abs(ev.real()) <= 1e-9 * hnorm) {
            found = true;
            if (freqs) freqs->push_back(std::abs(ev.imag()));
        }
    }
    return found;
}

}  // namespace

HinfResult hinf_norm(const Matrix& A, const Matrix& B, const Matrix& C, double rel_tol) {
    check_realization(A, B, C);
    require_hurwitz(A, "hinf_norm");
    HinfResult res;
    if (B.size() == 0 || C.size() == 0 || B.norm() == 0.0 || C.norm() == 0.0) return res;

    // Bracket from a coarse sweep: any sampled gain is a lower bound.
    double lo = sigma_max_at(A, B, C, 0.0);
    res.peak_frequency = 0.0;
    const int coarse = 60;
    for (int i = 0; i < coarse; ++i) {
        const double w = std::pow(10.0, -3.0 + 7.0 * i / (coarse - 1));
        const double s = sigma_max_at(A, B, C, w);
        if (s > lo) {
            lo = s;
            res.peak_frequency = w;
        }
    }
    double hi = 10.0 * lo;
    while (hamiltonian_has_imaginary(A, B, C, hi, nullptr)) hi *= 10.0;

    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> freqs;
        bool crossing = false;
        if (hamiltonian_has_imaginary(A, B, C, mid, &freqs)) {
            // A genuine crossing at w has sigma_max(G(jw)) >= mid; eigenvalues that
            // only look imaginary through rounding fail this test.
            for (double w : freqs) {
                const double s = sigma_max_at(A, B, C, w);
                if (s >= mid * (1.0 - 1e-7)) crossing = true;
                if (s > lo) {
                    lo = std::min(s, hi);
                    res.peak_frequency = w;
                }
            }
        }
        if (!crossing) hi = mid;
        else lo = std::max(lo, mid);
    }
    res.value = hi;
    return res;
}

HinfResult hinf_norm_grid(const Matrix& A, const Matrix& B, const Matrix& C, int points, double w_lo,
                          double w_hi) {
    check_realization(A, B, C);
    require_hurwitz(A, "hinf_norm_grid");
    HinfResult res;
    if (B.size() == 0 || C.size() == 0) return res;
    std::vector<double> w(points), s(points);
    const double l0 = std::log10(w_lo), l1 = std::log10(w_hi);
    for (int i = 0; i < points; ++i) {
        w[i] = std::pow(10.0, l0 + (l1 - l0) * i / (points - 1));
        s[i] = sigma_max_at(A, B, C, w[i]);
    }
    res.value = sigma_max_at(A, B, C, 0.0);
    res.peak_frequency = 0.0;
    for (int i = 0; i < points; ++i) {
        if (s[i] > res.value) {
            res.value = s[i];
            res.peak_frequency = w[i];
        }
    }
    // Refine every local maximum of the grid by golden-section search.
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 1; i + 1 < points; ++i) {
        if (!(s[i] >= s[i - 1] && s[i] >= s[i + 1])) continue;
        double a = w[i - 1], b = w[i + 1];
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = sigma_max_at(A, B, C, c), fd = sigma_max_at(A, B, C, d);
        for (int it = 0; it < 60 && (b - a) > 1e-12 * b; ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = sigma_max_at(A, B, C, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = sigma_max_at(A, B, C, d);
            }
        }
        const double wm = 0.5 * (a + b);
        const double sm = sigma_max_at(A, B, C, wm);
        if (sm > res.value) {
            res.value = sm;
            res.peak_frequency = wm;
        }
    }
    return res;
}

double h2_norm(const Matrix& A, const Matrix& B, const Matrix& C) {
    check_realization(A, B, C);
    require_hurwitz(A, "h2_norm");
    if (B.size() == 0 || C.size() == 0) return 0.0;
    const Matrix BBt = B * B.transpose();
    const Matrix X = solve_lyapunov(A, BBt);
    const double resid = (A * X + X * A.transpose() + BBt).norm();
    if (resid > 1e-8 * std::max(1.0, BBt.norm()) * std::max(1.0, A.norm())) {
        throw Error(ErrorKind::NumericalFailure, "Lyapunov residual too large in h2_norm");
    }
    return std::sqrt(std::max(0.0, (C * X * C.transpose()).trace()));
}

double h2_norm_frequency(const Matrix& A, const Matrix& B, const Matrix& C, double rel_tol) {
    check_realization(A, B, C);
    require_hurwitz(A, "h2_norm_frequency");
    if (B.size() == 0 || C.size() == 0) return 0.0;
    // w = s tan(theta) maps [0, pi/2) onto [0, inf).
    double s = 1.0;
    if (A.rows() > 0) {
        Eigen::EigenSolver<Matrix> es(A, false);
        double logsum = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            logsum += std::log(std::max(1e-12, std::abs(es.eigenvalues()(i))));
        }
        s = std::exp(logsum / static_cast<double>(es.eigenvalues().size()));
    }
    const double tail = (C * B).squaredNorm() / s;
    auto f = [&](double th) {
        if (th >= std::numbers::pi / 2) return tail;
        const double w = s * std::tan(th);
        const double sec2 = 1.0 + std::tan(th) * std::tan(th);
        return frequency_response(A, B, C, w).squaredNorm() * s * sec2;
    };

    std::function<double(double, double, double, double, double, double, int)> adapt =
        [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
            const double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * rel_tol * std::max(std::abs(left + right), 1e-300)) {
                return left + right + delta / 15.0;
            }
            return adapt(a, m, fa, flm, fm, left, depth - 1) + adapt(m, b, fm, frm, fb, right, depth - 1);
        };

    // Split into panels first so narrow resonances are not skipped.
    const int panels = 64;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = (std::numbers::pi / 2) * p / panels;
        const double b = (std::numbers::pi / 2) * (p + 1) / panels;
        const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
        const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
        total += adapt(a, b, fa, fm, fb, whole, 40);
    }
    return std::sqrt(std::max(0.0, total / std::numbers::pi));
}

NormReport norm_report(const Matrix& A, const Matrix& B_hinf, const Matrix& C_hinf, const Matrix& B_h2,
                       const Matrix& C_h2) {
    NormReport r;
    const HinfResult h = hinf_norm(A, B_hinf, C_hinf, r.hinf_rel_tol);
    r.hinf_value = h.value;
    r.hinf_peak_freq = h.peak_frequency;
    r.hinf_grid_value = hinf_norm_grid(A, B_hinf, C_hinf).value;
    r.h2_value = h2_norm(A, B_h2, C_h2);
    r.h2_frequency_value = h2_norm_frequency(A, B_h2, C_h2);
    return r;
}

// ---------------------------------------------------------------------------

bool ResidualReport::all_satisfied() const {
    return std::all_of(entries.begin(), entries.end(), [](const LmiResidual& e) { return e.satisfied; });
}

const LmiResidual* ResidualReport::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

namespace {

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

LmiResidual negative_block(const std::string& name, const Matrix& m, double tol) {
    LmiResidual r;
    r.name = name;
    r.negative = true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
    r.value = es.eigenvalues().maxCoeff();
    r.norm = es.eigenvalues().cwiseAbs().maxCoeff();
    r.satisfied = r.value <= tol * (1.0 + r.norm);
    return r;
}

LmiResidual positive_block(const std::string& name, const Matrix& m, double tol) {
    LmiResidual r;
    r.name = name;
    r.negative = false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
    r.value = es.eigenvalues().minCoeff();
    r.norm = es.eigenvalues().cwiseAbs().maxCoeff();
    r.satisfied = r.value >= -tol * (1.0 + r.norm);
    return r;
}

Matrix spd_solve(const Matrix& P, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(sym(P));
    if (llt.info() != Eigen::Success) {
        return P.completeOrthogonalDecomposition().solve(rhs);
    }
    return llt.solve(rhs);
}

ResidualReport verify(const CostModifiedArtifacts& a, double tol) {
    ResidualReport rep;
    rep.kind = "thm1";
    const auto n = a.A.rows();
    const Matrix Acl = a.A + a.Theta_l;
    rep.entries.push_back(negative_block("stability", Acl.transpose() * a.P + a.P * Acl, tol));
    rep.entries.push_back(positive_block("P", a.P, tol));

    const auto k = a.D_factor.rows();
    Matrix T(n, a.Theta_l.cols() + a.B_l.cols() + n);
    T << a.Theta_l, a.B_l, -Matrix::Identity(n, n);
    const Matrix TD = a.P * T * a.D_factor.transpose();  // T_tilde D_tilde^T with T_tilde = P T
    Matrix cost(2 * n + k, 2 * n + k);
    cost.setZero();
    cost.topLeftCorner(n, n) = 2.0 * a.P;
    cost.block(0, n, n, k) = TD;
    cost.block(n, 0, k, n) = TD.transpose();
    cost.block(0, n + k, n, n) = Matrix::Identity(n, n);
    cost.block(n + k, 0, n, n) = Matrix::Identity(n, n);
    cost.block(n, n, k, k) = Matrix::Identity(k, k);
    cost.bottomRightCorner(n, n) = a.W;
    rep.entries.push_back(positive_block("cost", cost, tol));

    // 2P - W^{-1} <= P W P, so the exact-product block is implied by the surrogate.
    const Matrix Winv = spd_solve(a.W, Matrix::Identity(n, n));
    const Matrix PWP = a.P * a.W * a.P;
    rep.entries.push_back(positive_block("pwp-bound", PWP - 2.0 * a.P + Winv, tol));
    Matrix exact(n + k, n + k);
    exact << PWP, TD, TD.transpose(), Matrix::Identity(k, k);
    rep.entries.push_back(positive_block("cost-exact-product", exact, tol));
    return rep;
}

ResidualReport verify(const ConstraintModifiedArtifacts& a, double tol) {
    ResidualReport rep;
    rep.kind = "thm2";
    const auto n = a.A.rows();
    const Matrix Acl = a.A + a.S_eta * a.Theta_l;
    rep.entries.push_back(negative_block("stability", Acl * a.Q + a.Q * Acl.transpose(), tol));
    Matrix young(2 * n, 2 * n);
    const Matrix off = a.S_eta * a.Theta_l + a.gamma_bar * a.Q;
    young << a.A * a.Q + a.Q * a.A.transpose(), off, off.transpose(),
        -2.0 * a.gamma_bar * Matrix::Identity(n, n);
    rep.entries.push_back(negative_block("young", young, tol));
    rep.entries.push_back(positive_block("Q", a.Q, tol));

    const auto q = a.Theta_l.rows();
    const auto k = a.D_factor.rows();
    Matrix T(q, a.Theta_l.cols() + a.B_l.cols() + q);
    T << a.Theta_l, a.B_l, -Matrix::Identity(q, q);
    const Matrix TD = T * a.D_factor.transpose();
    Matrix cost(q + k, q + k);
    cost << a.W, TD, TD.transpose(), Matrix::Identity(k, k);
    rep.entries.push_back(positive_block("cost", cost, tol));
    return rep;
}

ResidualReport verify(const FilterArtifacts& a, double tol) {
    ResidualReport rep;
    rep.kind = "prop1";
    const auto na = a.A_a.rows();
    const Matrix F = a.Pi * a.E;
    const Matrix H = a.Pi * a.K;
    const Matrix half = a.Pi * a.A_a + F * a.C_a * a.A_a - H * a.C_a;
    const Matrix Sbar = half + half.transpose();
    rep.entries.push_back(
        negative_block("iss", Sbar + a.epsilon * Matrix::Identity(na, na), tol));

    const auto nw = a.B_omega_a.cols();
    const auto nd = a.C_bar_a.rows();
    Matrix hinf = Matrix::Zero(na + nw + nd, na + nw + nd);
    const Matrix PB = -(a.Pi + F * a.C_a) * a.B_omega_a;
    hinf.topLeftCorner(na, na) = Sbar;
    hinf.block(0, na, na, nw) = PB;
    hinf.block(na, 0, nw, na) = PB.transpose();
    hinf.block(0, na + nw, na, nd) = a.C_bar_a.transpose();
    hinf.block(na + nw, 0, nd, na) = a.C_bar_a;
    hinf.block(na, na, nw, nw) = -a.lambda * Matrix::Identity(nw, nw);
    hinf.bottomRightCorner(nd, nd) = -a.lambda * Matrix::Identity(nd, nd);
    rep.entries.push_back(negative_block("hinf", hinf, tol));

    const auto mn = a.D_nu.cols();
    Matrix h2 = Matrix::Zero(na + 2 * mn, na + 2 * mn);
    const Matrix HD = H * a.D_nu;
    const Matrix FD = -F * a.D_nu;
    h2.topLeftCorner(na, na) = Sbar;
    h2.block(0, na, na, mn) = HD;
    h2.block(na, 0, mn, na) = HD.transpose();
    h2.block(0, na + mn, na, mn) = FD;
    h2.block(na + mn, 0, mn, na) = FD.transpose();
    h2.block(na, na, mn, mn) = -a.gamma * Matrix::Identity(mn, mn);
    h2.bottomRightCorner(mn, mn) = -a.gamma * Matrix::Identity(mn, mn);
    rep.entries.push_back(negative_block("h2", h2, tol));

    Matrix coupling(na + nd, na + nd);
    coupling << a.Pi, a.C_bar_a.transpose(), a.C_bar_a, a.Z;
    rep.entries.push_back(positive_block("coupling", coupling, tol));
    rep.entries.push_back(positive_block("Pi", a.Pi, tol));
    rep.entries.push_back(positive_block("gamma-trace", Matrix::Constant(1, 1, a.gamma - a.Z.trace()), tol));
    rep.entries.push_back(positive_block("gamma", Matrix::Constant(1, 1, a.gamma), tol));
    rep.entries.push_back(positive_block("lambda", Matrix::Constant(1, 1, a.lambda), tol));
    rep.entries.push_back(positive_block("gamma-max", Matrix::Constant(1, 1, a.gamma_max - a.gamma), tol));
    return rep;
}

}  // namespace

ResidualReport verify_certificate(const CertificateArtifacts& artifacts, double tol) {
    return std::visit([tol](const auto& a) { return verify(a, tol); }, artifacts);
}

}  // namespace greybox
