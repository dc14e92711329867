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

#include "greybox/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace greybox {

using sdp::AffineExpr;
using sdp::BlockLmi;
using sdp::Sense;

std::vector<double> default_gamma_grid() {
    std::vector<double> g(25);
    for (int i = 0; i < 25; ++i) g[i] = std::pow(10.0, -3.0 + 6.0 * i / 24.0);
    return g;
}

namespace {

struct LsFit {
    Matrix Theta, B;
    bool rank_deficient = false;
};

// Minimizer of tr(T D T^T) from the normal equations [Theta, B] D_zz = D_etaz,
// with z = [x; u] (or x alone). Minimum-norm when D_zz is singular.
LsFit ls_fit(const DataMatrix& dm, bool with_input) {
    const int n = dm.n;
    const int l = with_input ? dm.l : 0;
    const int q = dm.q;
    Matrix Dzz(n + l, n + l), Detaz(q, n + l);
    Dzz.topLeftCorner(n, n) = dm.D.topLeftCorner(n, n);
    Detaz.leftCols(n) = dm.D.block(n + dm.l, 0, q, n);
    if (l > 0) {
        Dzz.topRightCorner(n, l) = dm.D.block(0, n, n, l);
        Dzz.bottomLeftCorner(l, n) = dm.D.block(n, 0, l, n);
        Dzz.bottomRightCorner(l, l) = dm.D.block(n, n, l, l);
        Detaz.rightCols(l) = dm.D.block(n + dm.l, n, q, l);
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Dzz);
    cod.setThreshold(1e-12 * (n + l));
    const Matrix sol = cod.solve(Detaz.transpose()).transpose();
    LsFit f;
    f.Theta = sol.leftCols(n);
    f.B = l > 0 ? Matrix(sol.rightCols(l)) : Matrix(Matrix::Zero(q, dm.l));
    f.rank_deficient = cod.rank() < n + l;
    return f;
}

// Normalized factor blocks. The data are divided by sigma, the unconstrained
// optimal cost (floored at a small fraction of the mean diagonal of D), so the
// optimal certificate and W are of order one. Minimizers are unchanged and W
// scales by 1/sigma.
struct ScaledData {
    double sigma = 1.0;
    Matrix Fx, Fu, Feta;  // columns of the normalized factor
    int k = 0;
};

ScaledData scale_data(const DataMatrix& dm, bool with_input, double sigma = 0.0) {
    ScaledData s;
    if (sigma > 0.0) {
        s.sigma = sigma;
    } else {
        const double mean_diag = dm.D.trace() / dm.n_d();
        const LsFit f = ls_fit(dm, with_input);
        s.sigma = std::max(cost_J(dm, f.Theta, f.B), 1e-6 * mean_diag);
        if (!(s.sigma > 0.0)) s.sigma = 1.0;
    }
    const double g = 1.0 / std::sqrt(s.sigma);
    s.Fx = g * dm.factor_x();
    s.Fu = with_input ? Matrix(g * dm.factor_u()) : Matrix(dm.D_factor.rows(), 0);
    s.Feta = g * dm.factor_eta();
    s.k = static_cast<int>(dm.D_factor.rows());
    return s;
}

void check_dims(const LtiSystem& sys, const DataMatrix& dm, bool lifted, const char* who) {
    const Dims& d = sys.dims();
    const int q = lifted ? d.n : d.n_eta;
    if (dm.n != d.n || dm.l != d.l || dm.q != q || dm.lifted != lifted) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(who) + ": data layout (n=" + std::to_string(dm.n) + ", l=" + std::to_string(dm.l) +
                        ", q=" + std::to_string(dm.q) + (dm.lifted ? ", lifted" : ", unlifted") +
                        ") does not match the plant (n=" + std::to_string(d.n) + ", l=" + std::to_string(d.l) +
                        ", q=" + std::to_string(q) + (lifted ? ", lifted" : ", unlifted") + ")");
    }
}

double condition_number(const Matrix& P) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return es.eigenvalues().maxCoeff() / lo;
}

// Fills J, spectral abscissa and flips the status when the independent checks fail.
void finish(LearnReport& rep, const LtiSystem& sys, const DataMatrix& dm) {
    rep.achieved_J = cost_J(dm, rep.model.Theta_l, rep.model.B_l);
    rep.spectral_abscissa = spectral_abscissa(sys.A() + rep.model.S_eta_l * rep.model.Theta_l);
    if (!rep.optimal()) return;
    if (!(rep.spectral_abscissa < 0.0)) {
        rep.status = sdp::Status::NumericalFailure;
        rep.message = "recovered model failed the Hurwitz re-check";
    } else if (!rep.residuals.all_satisfied()) {
        rep.status = sdp::Status::NumericalFailure;
        rep.message = "recovered certificate failed the LMI re-check";
        for (const auto& e : rep.residuals.entries) {
            if (!e.satisfied) rep.message += " [" + e.name + "]";
        }
    }
}

}  // namespace

namespace {

struct Thm1Trial {
    sdp::Solution sol;
    sdp::Variable P, S, W;
    std::optional<sdp::Variable> R;
};

Thm1Trial solve_thm1(const LtiSystem& sys, const ScaledData& sd, const LearnerOptions& opts) {
    const int n = sys.dims().n;
    const int l = opts.include_input_gain ? sys.dims().l : 0;
    sdp::Problem p(opts.strict_shift);
    Thm1Trial t;
    t.P = p.symmetric("P", n);
    t.S = p.matrix("S", n, n);
    t.W = p.symmetric("W", n);
    if (l > 0) t.R = p.matrix("R", n, l);
    p.minimize(sdp::trace(t.W));

    const Matrix& A = sys.A();
    const AffineExpr P(t.P), S(t.S);
    p.add("stability", A.transpose() * P + P * A + S + S.transpose(), Sense::NegativeDefinite);

    // [2P, T~ D~^T, I; *, I, 0; *, *, W] >= 0 with T~ = [S, R, -P]
    const Matrix I = Matrix::Identity(n, n);
    if (sd.k > 0) {
        AffineExpr TD = S * sd.Fx.transpose() - P * sd.Feta.transpose();
        if (t.R) TD += AffineExpr(*t.R) * sd.Fu.transpose();
        BlockLmi lmi({n, sd.k, n});
        lmi.set(0, 0, 2.0 * P);
        lmi.set(0, 1, TD);
        lmi.set(0, 2, AffineExpr::constant(I));
        lmi.set(1, 1, AffineExpr::constant(Matrix::Identity(sd.k, sd.k)));
        lmi.set(2, 2, t.W);
        p.add("cost", lmi, Sense::PositiveSemidefinite);
    } else {
        BlockLmi lmi({n, n});
        lmi.set(0, 0, 2.0 * P);
        lmi.set(0, 1, AffineExpr::constant(I));
        lmi.set(1, 1, t.W);
        p.add("cost", lmi, Sense::PositiveSemidefinite);
    }
    p.add("P", t.P, Sense::PositiveDefinite);
    p.add("P-bound", AffineExpr::constant(opts.certificate_bound * I) - P, Sense::PositiveSemidefinite);
    if (opts.on_problem) opts.on_problem("thm1", p);
    t.sol = sdp::solve(p, opts.solver);
    return t;
}

// A failed solve usually still carries a W whose trace estimates the optimal
// cost; normalizing by it brings the optimum back to order one.
double rescue_sigma(const sdp::Solution& sol, const sdp::Variable& W, double sigma) {
    if (sol.values.empty()) return 0.0;
    const double tr = sol.value(W).trace();
    if (!std::isfinite(tr) || tr <= 0.0) return 0.0;
    const double ratio = std::clamp(tr / W.rows(), 1e-6, 1e6);
    return std::abs(std::log10(ratio)) < 0.5 ? 0.0 : sigma * ratio;
}

}  // namespace

LearnReport learn_cost_modified(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts) {
    check_dims(sys, dm, true, "learn_cost_modified");
    const int n = sys.dims().n;
    ScaledData sd = scale_data(dm, opts.include_input_gain);
    Thm1Trial t = solve_thm1(sys, sd, opts);
    if (!t.sol.optimal() && t.sol.status != sdp::Status::Infeasible) {
        const double sigma2 = rescue_sigma(t.sol, t.W, sd.sigma);
        if (sigma2 > 0.0) {
            ScaledData sd2 = scale_data(dm, opts.include_input_gain, sigma2);
            Thm1Trial t2 = solve_thm1(sys, sd2, opts);
            if (t2.sol.optimal()) {
                t = std::move(t2);
                sd = std::move(sd2);
            }
        }
    }
    const sdp::Solution& sol = t.sol;

    LearnReport rep;
    rep.status = sol.status;
    rep.message = sol.message;
    rep.iterations = sol.iterations;
    rep.model.provenance = Provenance::CostModified;
    rep.model.S_eta_l = Matrix::Identity(n, n);
    rep.model.Theta_l = Matrix::Zero(n, n);
    rep.model.B_l = Matrix::Zero(n, sys.dims().l);
    if (!sol.optimal()) {
        finish(rep, sys, dm);
        return rep;
    }

    const Matrix Pn = sol.value(t.P);
    rep.certificate_condition = condition_number(Pn);
    if (rep.certificate_condition > opts.max_condition) {
        throw Error(ErrorKind::NumericalFailure,
                    "learn_cost_modified: certificate P is ill-conditioned (cond " +
                        std::to_string(rep.certificate_condition) + "); rescale the data or the states");
    }
    Eigen::LLT<Matrix> llt(0.5 * (Pn + Pn.transpose()));
    rep.model.Theta_l = llt.solve(sol.value(t.S));
    if (t.R) rep.model.B_l = llt.solve(sol.value(*t.R));
    rep.model.certificate = Pn / sd.sigma;
    rep.W = sd.sigma * sol.value(t.W);
    rep.trace_W = rep.W.trace();

    const CostModifiedArtifacts art{sys.A(), rep.model.Theta_l, rep.model.B_l, rep.model.certificate, rep.W,
                                    dm.D_factor};
    rep.residuals = verify_certificate(art, opts.verify_tol);
    finish(rep, sys, dm);
    return rep;
}

namespace {

struct Thm2Trial {
    sdp::Solution sol;
    sdp::Variable Q, Theta, W;
    std::optional<sdp::Variable> B;
};

Thm2Trial solve_thm2(const LtiSystem& sys, const ScaledData& sd, double gamma_bar, const LearnerOptions& opts) {
    const int n = sys.dims().n;
    const int q = sys.dims().n_eta;
    const int l = opts.include_input_gain ? sys.dims().l : 0;
    sdp::Problem p(opts.strict_shift);
    Thm2Trial t;
    t.Q = p.symmetric("Q", n);
    t.Theta = p.matrix("Theta", q, n);
    t.W = p.symmetric("W", q);
    if (l > 0) t.B = p.matrix("B", q, l);
    p.minimize(sdp::trace(t.W));

    const Matrix& A = sys.A();
    const Matrix I = Matrix::Identity(n, n);
    BlockLmi young({n, n});
    young.set(0, 0, A * AffineExpr(t.Q) + AffineExpr(t.Q) * A.transpose());
    young.set(0, 1, sys.S_eta() * AffineExpr(t.Theta) + gamma_bar * AffineExpr(t.Q));
    young.set(1, 1, AffineExpr::constant(-2.0 * gamma_bar * I));
    p.add("young", young, Sense::NegativeDefinite);

    if (sd.k > 0) {
        AffineExpr TD = AffineExpr(t.Theta) * sd.Fx.transpose() - AffineExpr::constant(sd.Feta.transpose());
        if (t.B) TD += AffineExpr(*t.B) * sd.Fu.transpose();
        BlockLmi cost({q, sd.k});
        cost.set(0, 0, t.W);
        cost.set(0, 1, TD);
        cost.set(1, 1, AffineExpr::constant(Matrix::Identity(sd.k, sd.k)));
        p.add("cost", cost, Sense::PositiveSemidefinite);
    } else {
        p.add("cost", t.W, Sense::PositiveSemidefinite);
    }
    p.add("Q", t.Q, Sense::PositiveDefinite);
    p.add("Q-bound", AffineExpr::constant(opts.certificate_bound * I) - AffineExpr(t.Q), Sense::PositiveSemidefinite);
    if (opts.on_problem) opts.on_problem("thm2-gamma-" + std::to_string(gamma_bar), p);
    t.sol = sdp::solve(p, opts.solver);
    return t;
}

}  // namespace

LearnReport learn_constraint_modified(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts) {
    check_dims(sys, dm, false, "learn_constraint_modified");
    if (!is_hurwitz(sys.A())) {
        throw Error(ErrorKind::InvalidArgument, "learn_constraint_modified: A must be Hurwitz");
    }
    if (opts.gamma_grid.empty()) throw Error(ErrorKind::InvalidArgument, "learn_constraint_modified: empty gamma grid");
    for (double g : opts.gamma_grid) {
        if (!(g > 0.0)) throw Error(ErrorKind::InvalidArgument, "learn_constraint_modified: gamma_bar must be positive");
    }
    const int n = sys.dims().n;
    const int q = sys.dims().n_eta;
    const ScaledData sd = scale_data(dm, opts.include_input_gain);

    LearnReport rep;
    rep.model.provenance = Provenance::ConstraintModified;
    rep.model.S_eta_l = sys.S_eta();
    rep.model.Theta_l = Matrix::Zero(q, n);
    rep.model.B_l = Matrix::Zero(q, sys.dims().l);
    rep.status = sdp::Status::Infeasible;
    rep.message = "no gamma_bar in the grid gave a feasible program";

    std::optional<Thm2Trial> best;
    double best_gamma = 0.0;
    for (double g : opts.gamma_grid) {
        Thm2Trial t = solve_thm2(sys, sd, g, opts);
        GammaTrial gt{g, t.sol.status, t.sol.optimal() ? sd.sigma * t.sol.objective : 0.0};
        rep.line_search.push_back(gt);
        if (!t.sol.optimal()) continue;
        // Ties within 1e-9 relative keep the smaller (earlier) gamma_bar.
        if (!best || t.sol.objective < best->sol.objective * (1.0 - 1e-9) - 1e-300) {
            best = std::move(t);
            best_gamma = g;
        }
    }
    if (!best) {
        finish(rep, sys, dm);
        return rep;
    }

    const sdp::Solution& sol = best->sol;
    rep.status = sol.status;
    rep.message = sol.message;
    rep.iterations = sol.iterations;
    rep.gamma_bar = best_gamma;
    rep.model.Theta_l = sol.value(best->Theta);
    if (best->B) rep.model.B_l = sol.value(*best->B);
    rep.model.certificate = sol.value(best->Q);
    rep.certificate_condition = condition_number(rep.model.certificate);
    if (rep.certificate_condition > opts.max_condition) {
        throw Error(ErrorKind::NumericalFailure,
                    "learn_constraint_modified: certificate Q is ill-conditioned (cond " +
                        std::to_string(rep.certificate_condition) + "); rescale the data or the states");
    }
    rep.W = sd.sigma * sol.value(best->W);
    rep.trace_W = rep.W.trace();

    ConstraintModifiedArtifacts art{sys.A(),           sys.S_eta(), rep.model.Theta_l, rep.model.B_l,
                                    rep.model.certificate, rep.W,   dm.D_factor,       best_gamma};
    rep.residuals = verify_certificate(art, opts.verify_tol);
    finish(rep, sys, dm);
    return rep;
}

LearnReport learn_least_squares(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts) {
    check_dims(sys, dm, dm.lifted, "learn_least_squares");
    const LsFit f = ls_fit(dm, opts.include_input_gain);
    LearnReport rep;
    rep.model.provenance = Provenance::LeastSquares;
    rep.model.S_eta_l = dm.lifted ? Matrix(Matrix::Identity(dm.n, dm.n)) : sys.S_eta();
    rep.model.Theta_l = f.Theta;
    rep.model.B_l = f.B;
    rep.rank_deficient = f.rank_deficient;
    rep.status = sdp::Status::Optimal;
    rep.message = rep.rank_deficient ? "regressor block is rank deficient; minimum-norm solution" : "closed form";
    rep.achieved_J = cost_J(dm, rep.model.Theta_l, rep.model.B_l);
    rep.spectral_abscissa = spectral_abscissa(sys.A() + rep.model.S_eta_l * rep.model.Theta_l);
    rep.trace_W = rep.achieved_J;
    return rep;
}

}  // namespace greybox
