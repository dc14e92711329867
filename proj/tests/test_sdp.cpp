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

#include <random>
#include <sstream>

#include "doctest.h"
#include "greybox/sdp.hpp"

using namespace greybox;
using namespace greybox::sdp;

namespace {

// Feasibility problem  A^T P + P A < 0,  P > 0.
Solution lyapunov_feasibility(const Matrix& A, Problem& p, Variable& P) {
    const int n = static_cast<int>(A.rows());
    P = p.symmetric("P", n);
    p.add("lyap", A.transpose() * AffineExpr(P) + AffineExpr(P) * A, Sense::NegativeDefinite);
    p.add("P", P, Sense::PositiveDefinite);
    return solve(p);
}

double max_eig(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("trace minimisation with W >= I") {
    Problem p;
    auto W = p.symmetric("W", 2);
    p.minimize(trace(W));
    p.add("W>=I", AffineExpr(W) - Matrix::Identity(2, 2), Sense::PositiveSemidefinite);
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-6));
    CHECK((s.value(W) - Matrix::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("Lyapunov feasibility") {
    SUBCASE("A = -I admits P = I") {
        Problem p;
        Variable P;
        const Solution s = lyapunov_feasibility(-Matrix::Identity(3, 3), p, P);
        REQUIRE(s.status == Status::Optimal);
        CHECK(max_eig(-s.value(P)) < 0);
    }
    SUBCASE("lightly damped oscillator, checked by an eigen oracle") {
        Matrix A(2, 2);
        A << 0, 1, -1, -1;
        Problem p;
        Variable P;
        const Solution s = lyapunov_feasibility(A, p, P);
        REQUIRE(s.optimal());
        const Matrix& Pv = s.value(P);
        CHECK(max_eig(A.transpose() * Pv + Pv * A) < 0);
        CHECK(max_eig(-Pv) < 0);
    }
    SUBCASE("anti-stable A = +I is infeasible") {
        Problem p;
        Variable P;
        const Solution s = lyapunov_feasibility(Matrix::Identity(2, 2), p, P);
        CHECK(s.status == Status::Infeasible);
    }
}

TEST_CASE("canonical form of the forced-identity problem") {
    Problem p;
    auto W = p.symmetric("W", 2);
    p.minimize(trace(W));
    p.add("W>=I", AffineExpr(W) - Matrix::Identity(2, 2), Sense::PositiveSemidefinite);
    const ConicForm cf = p.canonicalize();
    CHECK(cf.num_vars == 3);
    REQUIRE(cf.block_sizes.size() == 1);
    CHECK(cf.block_sizes[0] == 2);
    // y = (W00, W01, W11); objective picks the diagonal.
    CHECK(cf.c(0) == 1.0);
    CHECK(cf.c(1) == 0.0);
    CHECK(cf.c(2) == 1.0);
    CHECK((cf.F0[0] + Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK(cf.F[0][1](0, 1) == 1.0);
    CHECK(cf.F[0][1](1, 0) == 1.0);

    std::ostringstream os;
    cf.dump(os);
    CHECK(os.str().find("cone_sizes 2") != std::string::npos);
}

TEST_CASE("strict constraints carry the epsilon shift") {
    Problem p(1e-3);
    auto t = p.scalar("t");
    p.minimize(AffineExpr(t));
    p.add("t>0", t, Sense::PositiveDefinite);
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    CHECK(s.scalar(t) == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("modeling errors") {
    Problem p, q;
    auto W = p.symmetric("W", 2);
    auto foreign = q.symmetric("V", 3);
    CHECK_THROWS_AS(p.add("bad", foreign, Sense::PositiveSemidefinite), Error);

    auto R = p.matrix("R", 2, 2);
    // R alone is not symmetric.
    p.add("asym", R, Sense::PositiveSemidefinite);
    CHECK_THROWS_AS(p.canonicalize(), Error);

    CHECK_THROWS_AS(AffineExpr(W) + AffineExpr::zero(3, 3), Error);
    BlockLmi lmi({2, 1});
    CHECK_THROWS_AS(lmi.set(0, 1, AffineExpr::zero(2, 2)), Error);
}

TEST_CASE("block LMI assembly is symmetric and matches direct evaluation") {
    Problem p;
    auto X = p.matrix("X", 2, 3);
    auto S = p.symmetric("S", 2);
    BlockLmi lmi({2, 3});
    lmi.set(0, 0, S);
    lmi.set(0, 1, X);
    lmi.set(1, 1, AffineExpr::constant(Matrix::Identity(3, 3)));
    const AffineExpr full = lmi.assemble();

    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    Matrix Xv = Matrix::NullaryExpr(2, 3, [&] { return nd(rng); });
    Matrix Sv = Matrix::NullaryExpr(2, 2, [&] { return nd(rng); });
    Sv = (Sv + Sv.transpose()).eval();
    const Matrix val = evaluate(full, {Xv, Sv});
    Matrix expect(5, 5);
    expect << Sv, Xv, Xv.transpose(), Matrix::Identity(3, 3);
    CHECK((val - expect).norm() < 1e-14);

    // pack/unpack agree.
    const Vector y = p.pack({Xv, Sv});
    const auto back = p.unpack(y);
    CHECK((back[0] - Xv).norm() == 0.0);
    CHECK((back[1] - Sv).norm() == 0.0);
}

TEST_CASE("round-trip certification on random trace-minimisation problems") {
    // minimize tr(W) s.t. [W, G^T; G, I] >= 0  <=>  W >= G^T G; optimum tr(G^T G).
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 4;
        const int k = 2 + trial % 3;
        Matrix G = Matrix::NullaryExpr(k, n, [&] { return nd(rng); });
        Problem p;
        auto W = p.symmetric("W", n);
        p.minimize(trace(W));
        BlockLmi lmi({n, k});
        lmi.set(0, 0, W);
        lmi.set(0, 1, AffineExpr::constant(G.transpose()));
        lmi.set(1, 1, AffineExpr::constant(Matrix::Identity(k, k)));
        p.add("schur", lmi, Sense::PositiveSemidefinite);
        const Solution s = solve(p);
        REQUIRE(s.optimal());
        CHECK(s.objective == doctest::Approx((G.transpose() * G).trace()).epsilon(1e-6));
        for (const auto& r : s.residuals) CHECK(r.min_eig >= -1e-6 * (1.0 + r.norm));
    }
}

TEST_CASE("free variables that appear in no constraint stay put") {
    Problem p;
    auto W = p.symmetric("W", 1);
    auto unused = p.matrix("unused", 2, 1);
    p.minimize(trace(W));
    p.add("W>=1", AffineExpr(W) - Matrix::Ones(1, 1), Sense::PositiveSemidefinite);
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    CHECK(s.value(unused).norm() == 0.0);
}
