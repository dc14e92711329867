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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace greybox {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
    DimensionMismatch,
    InvalidArgument,
    Infeasible,
    NumericalFailure,
    Io,
};

// Every library failure is reported through this type; the CLI maps the kind
// to an exit code (Io/InvalidArgument -> 2, everything numerical -> 1).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Throws DimensionMismatch naming both shapes when `ok` is false.
inline void require_shape(bool ok, const std::string& what, const Matrix& a, const Matrix& b) {
    if (!ok) {
        throw Error(ErrorKind::DimensionMismatch,
                    what + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
    }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace greybox
