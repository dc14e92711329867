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

#include <optional>
#include <string>

#include "greybox/common.hpp"

namespace greybox {

struct Dims {
    int n = 0;        // states
    int m = 0;        // outputs
    int l = 0;        // inputs
    int n_eta = 0;    // uncertainty channels
    int n_omega = 0;  // disturbance channels
    int m_nu = 0;     // noise channels

    bool operator==(const Dims&) const = default;
};

/**
 * Known plant  x' = A x + B_u u + S_eta eta + B_omega omega,  y = C x + D_nu nu.
 *
 * Immutable once constructed. The uncertainty eta itself is never part of this
 * type; the hidden ground truth of synthetic benchmarks lives in
 * TrueUncertainty and is consumed only by the simulation layer.
 */
class LtiSystem {
public:
    LtiSystem(Matrix A, Matrix B_u, Matrix S_eta, Matrix B_omega, Matrix C, Matrix D_nu);

    const Matrix& A() const { return A_; }
    const Matrix& B_u() const { return B_u_; }
    const Matrix& S_eta() const { return S_eta_; }
    const Matrix& B_omega() const { return B_omega_; }
    const Matrix& C() const { return C_; }
    const Matrix& D_nu() const { return D_nu_; }
    const Dims& dims() const { return dims_; }

    // S_eta rank deficiency is tolerated; callers may surface this as a warning.
    bool uncertainty_map_full_rank() const;

private:
    Matrix A_, B_u_, S_eta_, B_omega_, C_, D_nu_;
    Dims dims_;
};

// Hidden linear uncertainty eta = Theta_a x + B_a u of a synthetic benchmark.
struct TrueUncertainty {
    Matrix Theta_a;  // n_eta x n
    Matrix B_a;      // n_eta x l

    void check_against(const LtiSystem& sys) const;
};

// A plant file: the known model plus, for benchmarks, the hidden truth.
struct PlantDescription {
    LtiSystem system;
    std::optional<TrueUncertainty> truth;
};

enum class Provenance { CostModified, ConstraintModified, LeastSquares };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Learned eta_l(x, u) = Theta_l x + B_l u entering through S_eta_l.
struct UncertaintyModel {
    Matrix Theta_l;      // n_eta_l x n
    Matrix B_l;          // n_eta_l x l
    Matrix S_eta_l;      // n x n_eta_l
    Matrix certificate;  // P (cost-modified) or Q (constraint-modified); empty for least squares
    Provenance provenance = Provenance::LeastSquares;
};

/// Plant with the learned correction folded in: A + S_eta_l Theta_l, B_u + S_eta_l B_l.
/// The result has no uncertainty channel (S_eta has zero columns).
LtiSystem extended_model(const LtiSystem& sys, const UncertaintyModel& um);

/**
 * Plant augmented with an r-th order integrator chain for the uncertainty
 * (x_a = col[x, zeta_1, ..., zeta_r]):
 *
 *   A_a       = [A, S_eta, 0; 0, 0, I_{(r-1) n_eta}; 0, 0, 0]
 *   B_omega_a = [B_omega, 0; 0, 0; 0, I_{n_eta}]     (input col[omega, eta^(r)])
 *   C_a       = [C, 0]
 *   C_bar_a   = [C_bar_1; C_bar_2] = [0, I_{n_eta}, 0; I_n, 0]
 */
struct AugmentedSystem {
    Matrix A_a;
    Matrix B_ua;
    Matrix B_omega_a;
    Matrix C_a;
    Matrix C_bar_1;
    Matrix C_bar_2;
    Matrix C_bar_a;
    Matrix D_nu;
    int r = 0;
    int n_a = 0;
    Dims dims;
};

AugmentedSystem augment(const LtiSystem& sys, int r);

}  // namespace greybox
