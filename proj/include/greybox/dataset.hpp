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

#include <span>
#include <string>
#include <vector>

#include "greybox/common.hpp"

namespace greybox {

class LtiSystem;

// One labeled realization d_i = col[x_hat, u, eta_hat].
struct Sample {
    Vector x_hat;
    Vector u;
    Vector eta_hat;
    double t = 0.0;
};

/**
 * Gram matrix D = sum_i d_i d_i^T of the stacked samples, and a factor D_factor
 * with D_factor^T D_factor = D.
 *
 * The factor comes from a clipped symmetric eigendecomposition rather than a
 * Cholesky factorization because D is singular whenever the samples do not span
 * R^{n_d}. Rows belonging to (numerically) zero eigenvalues are dropped, so the
 * factor is rank x n_d.
 */
struct DataMatrix {
    Matrix D;
    Matrix D_factor;
    int sample_count = 0;
    int n = 0;   // x_hat block width
    int l = 0;   // u block width
    int q = 0;   // target block width (n when lifted, n_eta otherwise)
    bool lifted = false;

    int n_d() const { return n + l + q; }

    // Column slices of D_factor for the x_hat, u and target blocks.
    Matrix factor_x() const { return D_factor.leftCols(n); }
    Matrix factor_u() const { return D_factor.middleCols(n, l); }
    Matrix factor_eta() const { return D_factor.rightCols(q); }
};

/// Builds the data matrix. With `lift_map` non-empty every eta_hat is replaced by
/// lift_map * eta_hat (typically S_eta), so the target is the term entering x'.
DataMatrix build_data_matrix(std::span<const Sample> samples, const Matrix& lift_map = Matrix());

/// Convenience overload: lift with sys.S_eta() when `lift` is set.
DataMatrix build_data_matrix(std::span<const Sample> samples, const LtiSystem& sys, bool lift);

/// Factor of a symmetric PSD matrix via clipped eigendecomposition (rank x k).
Matrix psd_factor(const Matrix& D);

/// Quadratic fitting cost J = tr(T D T^T) with T = [Theta_l, B_l, -I].
double cost_J(const DataMatrix& dm, const Matrix& Theta_l, const Matrix& B_l);

/// Residual map T = [Theta_l, B_l, -I] for the given data layout.
Matrix residual_map(const DataMatrix& dm, const Matrix& Theta_l, const Matrix& B_l);

/// Drops samples with t < t_min.
std::vector<Sample> discard_transient(std::span<const Sample> samples, double t_min);

// CSV layout: header `t,xhat_1..xhat_n,u_1..u_l,etahat_1..etahat_q`, one row per sample.
void write_samples_csv(const std::string& path, std::span<const Sample> samples);
std::vector<Sample> read_samples_csv(const std::string& path);

}  // namespace greybox
