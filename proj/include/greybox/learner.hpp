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
#include <vector>

#include "greybox/analysis.hpp"
#include "greybox/dataset.hpp"
#include "greybox/model.hpp"
#include "greybox/sdp.hpp"

namespace greybox {

/// 25 log-spaced values on [1e-3, 1e3].
std::vector<double> default_gamma_grid();

struct LearnerOptions {
    // Learn the input gain B_l as well; when false B_l is fixed to zero and the
    // input columns of the data are ignored.
    bool include_input_gain = true;
    // Upper bound on the certificate (P or Q) in normalized units, where the
    // data are scaled so that the unconstrained optimal cost is one. Keeps the
    // programs bounded when the data carry no information (D = 0) or are noiseless.
    double certificate_bound = 1e3;
    std::vector<double> gamma_grid = default_gamma_grid();
    double strict_shift = 1e-6;
    // Certificates with a larger condition number are rejected.
    double max_condition = 1e10;
    double verify_tol = 1e-6;
    sdp::SolverOptions solver;
    sdp::ProblemHook on_problem;
};

struct GammaTrial {
    double gamma_bar = 0.0;
    sdp::Status status = sdp::Status::NumericalFailure;
    double trace_W = 0.0;
};

struct LearnReport {
    UncertaintyModel model;
    Matrix W;                    // in the units of the original data
    double trace_W = 0.0;        // certified upper bound on achieved_J (SDP routes)
    double achieved_J = 0.0;     // cost at the recovered parameters
    std::optional<double> gamma_bar;
    sdp::Status status = sdp::Status::NumericalFailure;
    std::string message;
    double spectral_abscissa = 0.0;  // of A + S_eta_l Theta_l
    double certificate_condition = 0.0;
    bool rank_deficient = false;     // least squares only
    int iterations = 0;
    ResidualReport residuals;        // empty for least squares
    std::vector<GammaTrial> line_search;

    bool optimal() const { return status == sdp::Status::Optimal; }
};

/// Cost-modified program over (P, S, R, W); needs lifted data. Recovers
/// Theta_l = P^{-1} S, B_l = P^{-1} R with S_eta_l = I.
LearnReport learn_cost_modified(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts = {});

/// Constraint-modified program over (Q, Theta_l, B_l, W) for every gamma_bar of
/// the grid; keeps the smallest feasible tr(W). Needs Hurwitz A and unlifted data.
LearnReport learn_constraint_modified(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts = {});

/// Unconstrained minimizer of the cost via the normal equations (minimum-norm
/// solution when the regressor block is singular). Lifted data give S_eta_l = I,
/// unlifted data give S_eta_l = S_eta.
LearnReport learn_least_squares(const LtiSystem& sys, const DataMatrix& dm, const LearnerOptions& opts = {});

}  // namespace greybox
