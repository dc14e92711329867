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

#include <cmath>
#include <random>

#include "doctest.h"
#include "greybox/analysis.hpp"

using namespace greybox;

namespace {

Matrix random_stable(std::mt19937& rng, int n) {
    std::normal_distribution<double> nd;
    Matrix A = Matrix::NullaryExpr(n, n, [&] { return nd(rng); });
    const double a = spectral_abscissa(A);
    A -= (a + 0.1 + 0.5 * std::abs(nd(rng))) * Matrix::Identity(n, n);
    return A;
}

Matrix randn(std::mt19937& rng, int r, int c) {
    std::normal_distribution<double> nd;
    return Matrix::NullaryExpr(r, c, [&] { return nd(rng); });
}

// Second-order low-pass wn^2 / (s^2 + 2 zeta wn s + wn^2) in companion form.
void second_order(double wn, double zeta, Matrix& A, Matrix& B, Matrix& C) {
    A.resize(2, 2);
    A << 0, 1, -wn * wn, -2 * zeta * wn;
    B = Matrix::Zero(2, 1);
    B(1, 0) = 1.0;
    C = Matrix::Zero(1, 2);
    C(0, 0) = wn * wn;
}

}  // namespace

TEST_CASE("spectral abscissa against quadratic roots") {
    // x^2 + p x + q: roots -p/2 +- sqrt(p^2/4 - q)
    for (double p : {0.5, 2.0, 5.0}) {
        for (double q : {-1.0, 0.3, 4.0}) {
            Matrix A(2, 2);
            A << 0, 1, -q, -p;
            const double disc = p * p / 4 - q;
            const double expect = disc >= 0 ? -p / 2 + std::sqrt(disc) : -p / 2;
            CHECK(spectral_abscissa(A) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(spectral_abscissa(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("Lyapunov solver") {
    SUBCASE("scalar closed form") {
        Matrix A = Matrix::Constant(1, 1, -3.0);
        Matrix Q = Matrix::Constant(1, 1, 4.0);
        CHECK(solve_lyapunov(A, Q)(0, 0) == doctest::Approx(4.0 / 6.0));
    }
    SUBCASE("random residuals") {
        std::mt19937 rng(5);
        for (int n = 1; n <= 9; ++n) {
            const Matrix A = random_stable(rng, n);
            const Matrix G = randn(rng, n, n);
            const Matrix Q = G * G.transpose();
            const Matrix X = solve_lyapunov(A, Q);
            CHECK((A * X + X * A.transpose() + Q).norm() < 1e-9 * (1 + Q.norm()));
            CHECK((X - X.transpose()).norm() == 0.0);
        }
    }
    SUBCASE("singular equation") {
        Matrix A(2, 2);
        A << 1, 0, 0, -1;
        CHECK_THROWS_AS(solve_lyapunov(A, Matrix::Identity(2, 2)), Error);
    }
}

TEST_CASE("first-order system norms") {
    // 1/(s+a): hinf = 1/a at w = 0, h2 = 1/sqrt(2a)
    for (double a : {0.1, 1.0, 7.5}) {
        Matrix A = Matrix::Constant(1, 1, -a), B = Matrix::Ones(1, 1), C = Matrix::Ones(1, 1);
        CHECK(hinf_norm(A, B, C).value == doctest::Approx(1.0 / a).epsilon(2e-6));
        CHECK(h2_norm(A, B, C) == doctest::Approx(1.0 / std::sqrt(2 * a)).epsilon(1e-10));
        CHECK(h2_norm_frequency(A, B, C) == doctest::Approx(1.0 / std::sqrt(2 * a)).epsilon(1e-7));
    }
}

TEST_CASE("resonant second-order norms") {
    for (double zeta : {0.02, 0.1, 0.4}) {
        for (double wn : {0.5, 3.0, 40.0}) {
            Matrix A, B, C;
            second_order(wn, zeta, A, B, C);
            const double peak = 1.0 / (2 * zeta * std::sqrt(1 - zeta * zeta));
            const double wpk = wn * std::sqrt(1 - 2 * zeta * zeta);
            const HinfResult h = hinf_norm(A, B, C);
            CHECK(h.value == doctest::Approx(peak).epsilon(2e-6));
            CHECK(h.peak_frequency == doctest::Approx(wpk).epsilon(1e-2));
            CHECK(hinf_norm_grid(A, B, C).value == doctest::Approx(peak).epsilon(1e-6));
            const double h2 = std::sqrt(wn / (4 * zeta));
            CHECK(h2_norm(A, B, C) == doctest::Approx(h2).epsilon(1e-9));
            CHECK(h2_norm_frequency(A, B, C) == doctest::Approx(h2).epsilon(1e-6));
        }
    }
}

TEST_CASE("Hamiltonian and grid estimates agree on random systems") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + trial % 8;
        const Matrix A = random_stable(rng, n);
        const Matrix B = randn(rng, n, 1 + trial % 3);
        const Matrix C = randn(rng, 1 + trial % 2, n);
        const HinfResult h = hinf_norm(A, B, C);
        const HinfResult g = hinf_norm_grid(A, B, C);
        // grid is a lower bound
        CHECK(g.value <= h.value * (1 + 1e-6));
        CHECK(std::abs(h.value - g.value) <= 1e-3 * h.value);
        const double h2 = h2_norm(A, B, C);
        CHECK(std::abs(h2 - h2_norm_frequency(A, B, C)) <= 1e-6 * h2);
        // H2 <= sqrt(trace) bound style sanity: sigma at 0 never exceeds hinf
        CHECK(sigma_max_at(A, B, C, 0.0) <= h.value * (1 + 1e-6));
    }
}

TEST_CASE("norms reject unstable or mismatched systems") {
    Matrix A = Matrix::Identity(2, 2), B = Matrix::Ones(2, 1), C = Matrix::Ones(1, 2);
    CHECK_THROWS_AS(hinf_norm(A, B, C), Error);
    CHECK_THROWS_AS(h2_norm(A, B, C), Error);
    CHECK_THROWS_AS(h2_norm(-A, Matrix::Ones(3, 1), C), Error);
    CHECK(hinf_norm(-A, Matrix::Zero(2, 0), C).value == 0.0);
    CHECK(h2_norm(-A, Matrix::Zero(2, 0), C) == 0.0);
}

TEST_CASE("certificate verification of a constraint-modified model") {
    // A = -I, S = I, Theta = -0.5 I, Q = I, gamma_bar = 1: Young block
    // [-2I, 0.5I; 0.5I, -2I] < 0.
    const int n = 2;
    ConstraintModifiedArtifacts a;
    a.A = -Matrix::Identity(n, n);
    a.S_eta = Matrix::Identity(n, n);
    a.Theta_l = -0.5 * Matrix::Identity(n, n);
    a.B_l = Matrix::Zero(n, 1);
    a.Q = Matrix::Identity(n, n);
    a.gamma_bar = 1.0;
    a.D_factor = Matrix::Identity(2 * n + 1, 2 * n + 1);
    Matrix T(n, 2 * n + 1);
    T << a.Theta_l, a.B_l, -Matrix::Identity(n, n);
    a.W = T * T.transpose();
    ResidualReport r = verify_certificate(a);
    CHECK(r.kind == "thm2");
    CHECK(r.all_satisfied());
    REQUIRE(r.find("cost") != nullptr);
    CHECK(std::abs(r.find("cost")->value) < 1e-12);

    a.W *= 0.9;
    r = verify_certificate(a);
    CHECK_FALSE(r.find("cost")->satisfied);
    CHECK(r.find("stability")->satisfied);

    a.Theta_l = 3.0 * Matrix::Identity(n, n);
    r = verify_certificate(a);
    CHECK_FALSE(r.find("stability")->satisfied);
}

TEST_CASE("certificate verification of a cost-modified model") {
    const int n = 2;
    CostModifiedArtifacts a;
    a.A = -Matrix::Identity(n, n);
    a.Theta_l = 0.3 * Matrix::Identity(n, n);
    a.B_l = Matrix::Zero(n, 0);
    a.P = Matrix::Identity(n, n);
    a.D_factor = Matrix::Identity(2 * n, 2 * n);
    // T_tilde D^T = P [Theta, -I]; with P = I, W >= (T D^T)(T D^T)^T suffices
    Matrix T(n, 2 * n);
    T << a.Theta_l, -Matrix::Identity(n, n);
    a.W = 2.0 * T * T.transpose() + Matrix::Identity(n, n);
    const ResidualReport r = verify_certificate(a);
    CHECK(r.kind == "thm1");
    CHECK(r.all_satisfied());
}
