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
#include <variant>
#include <vector>

#include "greybox/common.hpp"

namespace greybox {

struct DataMatrix;

/// Maximum real part of the eigenvalues of a square matrix.
double spectral_abscissa(const Matrix& A);

inline bool is_hurwitz(const Matrix& A) { return spectral_abscissa(A) < 0.0; }

/// Solves A X + X A^T + Q = 0 by complex Schur reduction and triangular
/// back-substitution. Throws NumericalFailure when A has eigenvalue pairs
/// summing to (nearly) zero.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

/// Largest singular value of C (j w I - A)^{-1} B.
double sigma_max_at(const Matrix& A, const Matrix& B, const Matrix& C, double w);

struct HinfResult {
    double value = 0.0;
    double peak_frequency = 0.0;  // rad/s
};

/// H-infinity norm of (A, B, C, 0) by bisection on the imaginary-axis
/// eigenvalues of the associated Hamiltonian matrix, to relative tolerance rel_tol.
HinfResult hinf_norm(const Matrix& A, const Matrix& B, const Matrix& C, double rel_tol = 1e-6);

/// Independent estimate by dense log-spaced frequency gridding on [w_lo, w_hi]
/// with local golden-section refinement around the grid maxima.
HinfResult hinf_norm_grid(const Matrix& A, const Matrix& B, const Matrix& C, int points = 2000,
                          double w_lo = 1e-3, double w_hi = 1e4);

/// H2 norm sqrt(tr(C X C^T)) with A X + X A^T + B B^T = 0.
double h2_norm(const Matrix& A, const Matrix& B, const Matrix& C);

/// Independent H2 estimate: adaptive quadrature of (1/pi) int_0^inf ||G(jw)||_F^2 dw.
double h2_norm_frequency(const Matrix& A, const Matrix& B, const Matrix& C, double rel_tol = 1e-9);

struct NormReport {
    double hinf_value = 0.0;
    double hinf_peak_freq = 0.0;
    double hinf_grid_value = 0.0;
    double h2_value = 0.0;
    double h2_frequency_value = 0.0;
    std::string hinf_method = "hamiltonian-bisection";
    std::string h2_method = "lyapunov";
    double hinf_rel_tol = 1e-6;
};

/// Both norms plus their frequency-domain cross-checks. Throws on non-Hurwitz A.
NormReport norm_report(const Matrix& A, const Matrix& B_hinf, const Matrix& C_hinf, const Matrix& B_h2,
                       const Matrix& C_h2);

// ---------------------------------------------------------------------------
// Certificate re-verification from recovered (not solver-internal) quantities.

struct LmiResidual {
    std::string name;
    bool negative = false;  // true for "< 0"/"<= 0" blocks
    // Most-positive eigenvalue of a negative block, most-negative of a positive one.
    double value = 0.0;
    double norm = 0.0;
    bool satisfied = false;
};

struct ResidualReport {
    std::string kind;
    std::vector<LmiResidual> entries;

    bool all_satisfied() const;
    const LmiResidual* find(const std::string& name) const;
};

// Learned with the cost-modified program: S_eta_l = I, certificate P.
struct CostModifiedArtifacts {
    Matrix A;
    Matrix Theta_l;
    Matrix B_l;
    Matrix P;
    Matrix W;
    Matrix D_factor;  // factor of the lifted data matrix
};

// Learned with the constraint-modified program: S_eta_l = S_eta, certificate Q.
struct ConstraintModifiedArtifacts {
    Matrix A;
    Matrix S_eta;
    Matrix Theta_l;
    Matrix B_l;
    Matrix Q;
    Matrix W;
    Matrix D_factor;  // factor of the unlifted data matrix
    double gamma_bar = 1.0;
};

// Estimator synthesis: Pi with F = Pi E, H = Pi K rebuilt from the gains.
struct FilterArtifacts {
    Matrix A_a, B_omega_a, C_a, C_bar_a, D_nu;
    Matrix E, K, Pi, Z;
    double lambda = 0.0;
    double gamma = 0.0;
    double epsilon = 0.0;
    double gamma_max = 0.0;
};

using CertificateArtifacts = std::variant<CostModifiedArtifacts, ConstraintModifiedArtifacts, FilterArtifacts>;

ResidualReport verify_certificate(const CertificateArtifacts& artifacts, double tol = 1e-6);

}  // namespace greybox
