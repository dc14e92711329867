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

#pragma once

#include <string>
#include <vector>

#include "greybox/analysis.hpp"
#include "greybox/model.hpp"
#include "greybox/sdp.hpp"

namespace greybox {

/**
 * Uncertainty-and-state filter
 *
 *   z' = N z + G u + L y_s,   x_hat_a = z - E y_s,
 *   eta_hat = C_bar_1 x_hat_a,   x_hat_s = C_bar_2 x_hat_a,
 *
 * with M = I + E C_a, N = M A_a - K C_a, G = M B_ua, L = K (I + C_a E) - M A_a E.
 * The gains come from a convex program minimizing the H-infinity bound lambda on
 * the map col[omega, eta^(r)] -> e_d subject to an H2 bound gamma <= gamma_max on
 * col[nu, nu'] -> e_d and a decay margin epsilon. The error e = x_hat_a - x_a obeys
 * e' = N e - M B_omega_a omega_a + B_nu_a nu_a and e_d = C_bar_a e.
 */
struct FilterDesign {
    AugmentedSystem aug;
    Matrix E, K;        // n_a x m
    Matrix M, N;        // n_a x n_a
    Matrix G;           // n_a x l
    Matrix L;           // n_a x m
    Matrix B_nu_a;      // [K D_nu, -E D_nu]
    Matrix Pi, Z;       // certificate
    double lambda_star = 0.0;
    double gamma_star = 0.0;
    double epsilon = 0.0;
    double gamma_max = 0.0;
    double iss_gain_bound = 0.0;

    // Independent re-verification.
    NormReport norms;            // hinf of (N, -M B_omega_a, C_bar_a), h2 of (N, B_nu_a, C_bar_a)
    double spectral_abscissa_N = 0.0;
    ResidualReport residuals;
    int iterations = 0;
    std::string message;

    // Error map inputs: omega_a = col[omega, eta^(r)], nu_a = col[nu, nu'].
    Matrix error_input_omega() const { return -M * aug.B_omega_a; }
    bool certified(double rel = 1e-4) const;
};

struct FilterOptions {
    double strict_shift = 1e-6;
    double verify_tol = 1e-6;
    // The optimum is often approached only asymptotically; a slightly suboptimal
    // lambda is still a valid bound and is checked against the norm oracles.
    sdp::SolverOptions solver = [] {
        sdp::SolverOptions s;
        s.reduced_accuracy_tol = 1e-3;
        return s;
    }();
    sdp::ProblemHook on_problem;
};

/// PBH test: rank [A_a - s I; C_a] = n_a at every eigenvalue s of A_a with Re s >= 0.
bool is_detectable(const Matrix& A, const Matrix& C, double tol = 1e-9);

/// Single solve for given epsilon and gamma_max. Throws InvalidArgument when
/// (A_a, C_a) is not detectable and Infeasible (with a diagnosis of the likely
/// binding constraint) when the program has no solution.
FilterDesign design_filter(const AugmentedSystem& aug, double epsilon, double gamma_max,
                           const FilterOptions& opts = {});

/// Derived matrices, ISS bound and independent verification from the gains and
/// the certificate.
FilterDesign assemble_filter(const AugmentedSystem& aug, const Matrix& E, const Matrix& K, const Matrix& Pi,
                             const Matrix& Z, double lambda, double gamma, double epsilon, double gamma_max,
                             double verify_tol = 1e-6);

/// 4 points per decade on [1e-2, 1e2].
std::vector<double> default_gamma_max_grid();

struct GammaMaxTrial {
    double gamma_max = 0.0;
    bool feasible = false;
    double lambda_star = 0.0;
    std::string message;
};

/// Runs design_filter over a gamma_max grid and keeps the smallest lambda*
/// (earliest grid point on ties). Throws Infeasible when no point is feasible.
FilterDesign design_filter_sweep(const AugmentedSystem& aug, double epsilon, const std::vector<double>& grid,
                                 const FilterOptions& opts = {}, std::vector<GammaMaxTrial>* trials = nullptr);

struct FilterState {
    double t = 0.0;
    Vector z;
    Vector x_hat_a;
    Vector eta_hat;
    Vector x_hat_s;
};

/// State with internal vector z and outputs recomputed from the measurement y_s.
FilterState make_filter_state(const FilterDesign& fd, const Vector& z, const Vector& y_s, double t = 0.0);

// Input and measurement at the start, midpoint and end of a step.
struct FilterStepInput {
    Vector u0, y0, u_mid, y_mid, u1, y1;
};

/// One classical Runge-Kutta step of z' = N z + G u + L y_s. Throws
/// NumericalFailure naming the time when the state becomes non-finite.
FilterState step_filter(const FilterDesign& fd, const FilterState& s, const FilterStepInput& in, double dt);

/// Same with u and y_s held constant over the step.
FilterState step_filter(const FilterDesign& fd, const FilterState& s, const Vector& u, const Vector& y_s, double dt);

}  // namespace greybox
