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

#include <json.hpp>

#include "greybox/analysis.hpp"
#include "greybox/estimator.hpp"
#include "greybox/learner.hpp"
#include "greybox/model.hpp"
#include "greybox/simkit.hpp"

// JSON serialization. Matrices are row-major nested arrays; an r x 0 matrix is
// written as r empty rows so every shape survives a round trip.
namespace greybox::io {

using Json = nlohmann::json;

Json to_json(const Matrix& m);
// `cols_if_empty` fixes the column count of a matrix with zero rows.
Matrix matrix_from_json(const Json& j, const std::string& what, int cols_if_empty = 0);
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

/// Plant file: keys A, B_u, S_eta, B_omega, C, D_nu and optional
/// true_uncertainty {Theta_a, B_a}.
Json to_json(const PlantDescription& p);
PlantDescription plant_from_json(const Json& j);
PlantDescription read_plant(const std::string& path);
void write_plant(const std::string& path, const PlantDescription& p);

Json to_json(const UncertaintyModel& m);
UncertaintyModel uncertainty_model_from_json(const Json& j);

Json to_json(const ResidualReport& r);
Json to_json(const NormReport& r);
Json to_json(const LearnReport& r);
/// Reads the model part of a LearnReport file.
UncertaintyModel model_from_learn_report(const Json& j);

Json to_json(const FilterDesign& fd);
/// Rebuilds a design from its gains and certificate for the given plant; the
/// derived matrices and the verification are recomputed.
FilterDesign filter_design_from_json(const Json& j, const LtiSystem& sys);

Json to_json(const Signal& s);
/// Explicit signal forms (as written by to_json). Random generators are
/// resolved by the scenario layer.
Signal signal_from_json(const Json& j, const std::string& what);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

}  // namespace greybox::io
