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

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "greybox/common.hpp"

// Block-LMI modeling layer and a dense primal-dual interior-point solver.
//
// Problems are stated over matrix-valued decision variables; every constraint is
// a symmetric affine matrix expression with a definiteness sense. canonicalize()
// turns the problem into the standard LMI form
//
//     minimize c^T y   s.t.   F_j(y) = F_j0 + sum_i y_i F_ji  >= 0   for every block j,
//
// which solve() treats as the dual of  min <C,X> s.t. A(X) = b, X >= 0.
namespace greybox::sdp {

enum class VariableKind { Symmetric, Rectangular, Scalar };

class Variable {
public:
    Variable() = default;

    int id() const { return id_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    VariableKind kind() const { return kind_; }

private:
    friend class Problem;
    Variable(int id, int rows, int cols, VariableKind kind)
        : id_(id), rows_(rows), cols_(cols), kind_(kind) {}

    int id_ = -1;
    int rows_ = 0;
    int cols_ = 0;
    VariableKind kind_ = VariableKind::Scalar;
};

// left * V * right (or left * V^T * right). Scalar variables act as v * I_p with
// p = left.cols().
struct Term {
    int var = -1;
    VariableKind kind = VariableKind::Scalar;
    int var_rows = 0;
    int var_cols = 0;
    Matrix left;
    Matrix right;
    bool transposed = false;
};

class AffineExpr {
public:
    AffineExpr() = default;
    AffineExpr(const Variable& v);  // NOLINT(google-explicit-constructor)

    static AffineExpr constant(const Matrix& m);
    static AffineExpr zero(int rows, int cols);
    // v * I_k for a scalar variable v.
    static AffineExpr scaled_identity(const Variable& v, int k);

    int rows() const { return static_cast<int>(constant_.rows()); }
    int cols() const { return static_cast<int>(constant_.cols()); }
    const Matrix& constant_part() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }

    AffineExpr transpose() const;

    AffineExpr& operator+=(const AffineExpr& o);
    AffineExpr& operator-=(const AffineExpr& o);

    friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
    friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
    friend AffineExpr operator-(const AffineExpr& a);
    friend AffineExpr operator*(const Matrix& m, const AffineExpr& e);
    friend AffineExpr operator*(const AffineExpr& e, const Matrix& m);
    friend AffineExpr operator*(double s, const AffineExpr& e);

private:
    Matrix constant_;
    std::vector<Term> terms_;
};

AffineExpr operator+(const AffineExpr& a, const Matrix& m);
AffineExpr operator-(const AffineExpr& a, const Matrix& m);

// 1x1 expression equal to tr(V) for a square variable.
AffineExpr trace(const Variable& v);

// Square block grid; only blocks (i, j) with i <= j are stated, the lower part
// is the block transpose, so the assembled matrix is symmetric by construction.
class BlockLmi {
public:
    explicit BlockLmi(std::vector<int> block_sizes);

    BlockLmi& set(int i, int j, const AffineExpr& e);
    AffineExpr assemble() const;
    const std::vector<int>& block_sizes() const { return sizes_; }

private:
    std::vector<int> sizes_;
    std::vector<std::vector<AffineExpr>> blocks_;
    std::vector<std::vector<bool>> present_;
};

// PositiveDefinite / NegativeDefinite are enforced as >= eps*I / <= -eps*I.
enum class Sense { PositiveSemidefinite, NegativeSemidefinite, PositiveDefinite, NegativeDefinite };

struct Constraint {
    std::string name;
    AffineExpr expr;
    Sense sense;
};

struct ConicForm {
    int num_vars = 0;
    Vector c;
    double c0 = 0.0;
    std::vector<int> block_sizes;
    std::vector<Matrix> F0;                // per block
    std::vector<std::vector<Matrix>> F;    // [block][var]
    std::vector<std::string> block_names;

    // Plain-text dump: objective vector, cone sizes, then F0/F_i per block.
    void dump(std::ostream& os) const;
};

class Problem {
public:
    explicit Problem(double strict_shift = 1e-6) : strict_shift_(strict_shift) {}

    Variable symmetric(const std::string& name, int order);
    Variable matrix(const std::string& name, int rows, int cols);
    Variable scalar(const std::string& name);

    void minimize(const AffineExpr& objective);
    void add(const std::string& name, const AffineExpr& expr, Sense sense);
    void add(const std::string& name, const BlockLmi& lmi, Sense sense) { add(name, lmi.assemble(), sense); }

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_scalars() const { return offsets_.empty() ? 0 : offsets_.back(); }
    double strict_shift() const { return strict_shift_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<Variable>& variables() const { return vars_; }
    const std::string& name_of(const Variable& v) const { return names_.at(v.id()); }
    int offset_of(int var_id) const { return offsets_.at(var_id); }

    ConicForm canonicalize() const;

    // Unpack a scalar vector y into per-variable matrices.
    std::vector<Matrix> unpack(const Vector& y) const;
    Vector pack(const std::vector<Matrix>& values) const;

private:
    Variable add_variable(const std::string& name, int rows, int cols, VariableKind kind);
    void check_expr(const AffineExpr& e, const std::string& where) const;

    double strict_shift_;
    std::vector<Variable> vars_;
    std::vector<std::string> names_;
    std::vector<int> offsets_{0};
    AffineExpr objective_ = AffineExpr::zero(1, 1);
    std::vector<Constraint> constraints_;
};

Matrix evaluate(const AffineExpr& e, const std::vector<Matrix>& values);

enum class Status { Optimal, Infeasible, NumericalFailure };
std::string to_string(Status s);

struct SolverOptions {
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    int max_iterations = 120;
    // Relative tolerance of the backend-independent feasibility re-check.
    double certify_tol = 1e-7;
    double step_fraction = 0.98;
    // Near degenerate optima the Newton systems lose accuracy before gap_tol is
    // met. The best iterate is then accepted when its gap and infeasibilities are
    // below this level and the independent certificate re-check passes.
    double reduced_accuracy_tol = 1e-4;
    bool verbose = false;
};

struct ConstraintResidual {
    std::string name;
    Sense sense;
    // Most-negative eigenvalue of the constraint oriented as ">= 0" without the
    // strictness shift; negative values are violations.
    double min_eig = 0.0;
    double norm = 0.0;
};

struct Solution {
    Status status = Status::NumericalFailure;
    std::vector<Matrix> values;
    double objective = 0.0;
    double max_violation = 0.0;  // max over constraints of -min_eig/(1+norm), clipped at 0
    double rel_gap = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    std::string message;
    std::vector<ConstraintResidual> residuals;

    const Matrix& value(const Variable& v) const { return values.at(v.id()); }
    double scalar(const Variable& v) const { return values.at(v.id())(0, 0); }
    bool optimal() const { return status == Status::Optimal; }
};

Solution solve(const Problem& p, const SolverOptions& opts = {});

// Observer called with a label and every problem right before it is solved
// (used to emit conic dumps).
using ProblemHook = std::function<void(const std::string& label, const Problem& p)>;

// Substitutes values into every constraint of p and reports eigenvalue residuals.
std::vector<ConstraintResidual> certify(const Problem& p, const std::vector<Matrix>& values);

}  // namespace greybox::sdp
