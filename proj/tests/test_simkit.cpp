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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "greybox/simkit.hpp"

using namespace greybox;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

LtiSystem scalar_plant(double a) { return LtiSystem(scalar(a), scalar(1), scalar(1), Matrix::Zero(1, 0), scalar(1), scalar(1)); }

TrueUncertainty no_uncertainty(const LtiSystem& s) {
    return {Matrix::Zero(s.dims().n_eta, s.dims().n), Matrix::Zero(s.dims().n_eta, s.dims().l)};
}

PlantSignals quiet(const LtiSystem& s, Signal u) {
    return {std::move(u), Signal::zero(s.dims().n_omega), Signal::zero(s.dims().m_nu)};
}

// Central difference of order `order` for checking analytic derivatives.
Vector numeric_derivative(const Signal& s, double t, int order, double h = 1e-3) {
    if (order == 0) return s.value(t);
    return (numeric_derivative(s, t + h, order - 1, h) - numeric_derivative(s, t - h, order - 1, h)) / (2 * h);
}

}  // namespace

TEST_CASE("signal values and analytic derivatives") {
    const Signal c = Signal::constant(Vector::Constant(2, 3.0));
    CHECK(c.value(7.0) == Vector::Constant(2, 3.0));
    CHECK(c.derivative(7.0, 1).isZero());

    const Signal r = Signal::ramp(Vector::Constant(1, 1.0), Vector::Constant(1, 2.0));
    CHECK(r.value(3.0)(0) == doctest::Approx(7.0));
    CHECK(r.derivative(3.0, 1)(0) == doctest::Approx(2.0));
    CHECK(r.derivative(3.0, 2)(0) == doctest::Approx(0.0));

    Matrix coeffs(1, 4);
    coeffs << 1, -2, 0.5, 0.25;  // 1 - 2t + t^2/2 + t^3/4
    const Signal p = Signal::polynomial(coeffs);
    CHECK(p.value(2.0)(0) == doctest::Approx(1 - 4 + 2 + 2));
    CHECK(p.derivative(2.0, 1)(0) == doctest::Approx(-2 + 2 + 3));
    CHECK(p.derivative(2.0, 3)(0) == doctest::Approx(1.5));
    CHECK(p.derivative(2.0, 4)(0) == doctest::Approx(0.0));

    const Signal m = Signal::multisine({{{2.0, 3.0, 0.5}, {1.0, 0.7, -1.0}}});
    CHECK(m.value(1.2)(0) == doctest::Approx(2 * std::sin(3.6 + 0.5) + std::sin(0.84 - 1.0)));
    for (int order = 1; order <= 3; ++order) {
        CHECK(m.derivative(1.2, order)(0) == doctest::Approx(numeric_derivative(m, 1.2, order)(0)).epsilon(1e-4));
    }
    CHECK(m.bound() == doctest::Approx(3.0));
    CHECK_THROWS_AS(m.derivative(1.0, -1), Error);
}

TEST_CASE("random signals are deterministic and bounded") {
    const Signal a = Signal::random_multisine(2, 6, 0.1, 5.0, 1.0, 42);
    const Signal b = Signal::random_multisine(2, 6, 0.1, 5.0, 1.0, 42);
    const Signal c = Signal::random_multisine(2, 6, 0.1, 5.0, 1.0, 43);
    CHECK(a.value(3.3) == b.value(3.3));
    CHECK(a.value(3.3) != c.value(3.3));
    for (const auto& ch : a.sines()) {
        REQUIRE(ch.size() == 6);
        double amp = 0.0;
        for (const auto& s : ch) {
            CHECK(s.frequency >= 0.1);
            CHECK(s.frequency <= 5.0);
            amp += s.amplitude;
        }
        CHECK(amp == doctest::Approx(1.0));
    }

    const Signal f = Signal::filtered_random(2, 0.5, 0.2, 10.0, 7);
    const Signal g = Signal::filtered_random(2, 0.5, 0.2, 10.0, 7);
    double peak = 0.0;
    for (double t = 0.0; t <= 10.0; t += 0.01) {
        CHECK(f.value(t) == g.value(t));
        peak = std::max(peak, f.value(t).cwiseAbs().maxCoeff());
    }
    CHECK(peak <= 0.5 + 1e-12);
    CHECK(f.bound() <= 0.5 + 1e-12);
    // C1: the first derivative matches a finite difference away from knots
    CHECK(f.derivative(1.03, 1)(0) == doctest::Approx(numeric_derivative(f, 1.03, 1, 1e-6)(0)).epsilon(1e-4));
}

TEST_CASE("first-order plant matches the closed form") {
    // x' = -2 x + u with u = 1: x(t) = 1/2 + (x0 - 1/2) e^{-2t}
    const LtiSystem s = scalar_plant(-2.0);
    SimOptions so;
    so.T = 3.0;
    so.dt = 1e-3;
    const Trajectory tr = simulate_plant(s, no_uncertainty(s), quiet(s, Signal::constant(Vector::Ones(1))),
                                         Vector::Constant(1, 2.0), so);
    REQUIRE(tr.size() == 3001);
    double err = 0.0;
    for (int k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k];
        err = std::max(err, std::abs(tr.channel("x")(k, 0) - (0.5 + 1.5 * std::exp(-2 * t))));
    }
    CHECK(err <= 1e-10);
    CHECK(tr.channel("y") == tr.channel("x"));
}

TEST_CASE("hidden uncertainty shifts the pole") {
    // x' = -x + eta, eta = -x: decay rate 2
    const LtiSystem s = scalar_plant(-1.0);
    const TrueUncertainty tu{scalar(-1), scalar(0)};
    SimOptions so;
    so.T = 2.0;
    const Trajectory tr = simulate_plant(s, tu, quiet(s, Signal::zero(1)), Vector::Ones(1), so);
    CHECK(tr.channel("x")(tr.size() - 1, 0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-9));
    CHECK(tr.channel("eta")(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("undamped oscillator keeps its energy") {
    Matrix A(2, 2);
    A << 0, 1, -1, 0;
    const LtiSystem s(A, Matrix::Zero(2, 1), Matrix::Zero(2, 1), Matrix::Zero(2, 0), Matrix::Identity(2, 2),
                      Matrix::Identity(2, 2));
    SimOptions so;
    so.T = 2 * 3.14159265358979323846;
    so.dt = so.T / 6000;
    const Trajectory tr = simulate_plant(s, no_uncertainty(s), quiet(s, Signal::zero(1)), Vector::Unit(2, 0), so);
    CHECK((tr.channel("x").bottomRows(1).transpose() - Vector::Unit(2, 0)).norm() <= 1e-10);
}

TEST_CASE("step size matters only at the integration error level") {
    const LtiSystem s = scalar_plant(-0.5);
    const Signal u = Signal::multisine({{{1.0, 2.0, 0.0}, {0.5, 7.0, 1.0}}});
    SimOptions a, b;
    a.T = b.T = 4.0;
    a.dt = 2e-3;
    b.dt = 1e-3;
    const Trajectory ta = simulate_plant(s, no_uncertainty(s), quiet(s, u), Vector::Zero(1), a);
    const Trajectory tb = simulate_plant(s, no_uncertainty(s), quiet(s, u), Vector::Zero(1), b);
    double diff = 0.0;
    for (int k = 0; k < ta.size(); ++k) diff = std::max(diff, std::abs(ta.channel("x")(k, 0) - tb.channel("x")(2 * k, 0)));
    CHECK(diff <= 1e-10);
}

TEST_CASE("invalid simulation settings") {
    const LtiSystem s = scalar_plant(-1e4);
    SimOptions so;
    so.T = 1.0;
    CHECK_THROWS_AS(simulate_plant(s, no_uncertainty(s), quiet(s, Signal::zero(1)), Vector::Ones(1), so), Error);

    const LtiSystem ok = scalar_plant(-1.0);
    so.dt = 0.3;  // does not divide T
    CHECK_THROWS_AS(simulate_plant(ok, no_uncertainty(ok), quiet(ok, Signal::zero(1)), Vector::Ones(1), so), Error);
    so.dt = 1e-3;
    CHECK_THROWS_AS(simulate_plant(ok, no_uncertainty(ok), quiet(ok, Signal::zero(2)), Vector::Ones(1), so), Error);
    CHECK_THROWS_AS(simulate_plant(ok, no_uncertainty(ok), quiet(ok, Signal::zero(1)), Vector::Ones(2), so), Error);

    // blow-up is reported, not silently returned
    const LtiSystem unstable = scalar_plant(5.0);
    so.T = 200.0;
    so.dt = 1e-3;
    try {
        simulate_plant(unstable, no_uncertainty(unstable), quiet(unstable, Signal::zero(1)), Vector::Ones(1), so);
        FAIL("expected a blow-up");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NumericalFailure);
    }
}

TEST_CASE("dataset extraction window") {
    const LtiSystem s = scalar_plant(-1.0);
    SimOptions so;
    so.T = 10.0;
    so.dt = 1e-3;
    Trajectory tr = simulate_plant(s, no_uncertainty(s), quiet(s, Signal::constant(Vector::Ones(1))), Vector::Zero(1), so);
    // extract_dataset needs the filter channels; reuse the plant ones
    tr.add("xhat", 1) = tr.channel("x");
    tr.add("etahat", 1) = tr.channel("eta");
    const auto samples = extract_dataset(tr, 100.0, 2.0);
    CHECK(samples.size() == 800);  // [2, 10) at 100 Hz
    CHECK(samples.front().t == doctest::Approx(2.0));
    CHECK(samples.back().t == doctest::Approx(9.99));
    CHECK(samples[5].x_hat(0) == doctest::Approx(1 - std::exp(-2.05)).epsilon(1e-9));
    CHECK_THROWS_AS(extract_dataset(tr, 100.0, 10.0), Error);
    CHECK_THROWS_AS(extract_dataset(tr, 300.0, 2.0), Error);
    CHECK_THROWS_AS(extract_dataset(tr, -1.0, 2.0), Error);
}

TEST_CASE("RMSE of a model against itself is zero") {
    Matrix A(2, 2);
    A << -1, 0.5, 0, -2;
    const LtiSystem s(A, Matrix::Ones(2, 1), Matrix::Identity(2, 2), Matrix::Zero(2, 0), Matrix::Identity(2, 2),
                      Matrix::Identity(2, 2));
    const TrueUncertainty tu{(Matrix(2, 2) << -0.3, 0, 0.1, -0.2).finished(), Matrix::Zero(2, 1)};
    const UncertaintyModel exact{tu.Theta_a, tu.B_a, s.S_eta(), Matrix(), Provenance::LeastSquares};
    SimOptions so;
    so.T = 5.0;
    const Signal u = Signal::multisine({{{1.0, 1.0, 0.0}}});
    const RmseResult r = evaluate_rmse(s, tu, extended_model(s, exact), u, Vector::Ones(2), so);
    CHECK(r.rmse.norm() <= 1e-14);
    CHECK_FALSE(r.divergent);
    CHECK(r.spectral_abscissa < 0.0);

    const UncertaintyModel none{Matrix::Zero(0, 2), Matrix::Zero(0, 1), Matrix::Zero(2, 0), Matrix(),
                                Provenance::LeastSquares};
    const RmseResult b = evaluate_rmse(s, tu, extended_model(s, none), u, Vector::Ones(2), so, 100.0);
    CHECK(b.rmse.minCoeff() > 1e-3);

    // An unstable model is flagged.
    const UncertaintyModel bad{(Matrix(2, 2) << 3, 0, 0, 0).finished(), Matrix::Zero(2, 1), s.S_eta(), Matrix(),
                               Provenance::LeastSquares};
    const RmseResult d = evaluate_rmse(s, tu, extended_model(s, bad), u, Vector::Ones(2), so);
    CHECK(d.divergent);
    CHECK(d.spectral_abscissa > 0.0);
}

TEST_CASE("trajectory CSV layout") {
    const LtiSystem s = scalar_plant(-1.0);
    SimOptions so;
    so.T = 1.0;
    so.dt = 0.01;
    const Trajectory tr =
        simulate_plant(s, no_uncertainty(s), quiet(s, Signal::constant(Vector::Ones(1))), Vector::Zero(1), so);
    const auto path = (std::filesystem::temp_directory_path() / "greybox_test_traj.csv").string();
    tr.write_csv(path, {"x", "u"}, 10);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,x_1,u_1");
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 11);
    is.close();
    std::filesystem::remove(path);
    CHECK_THROWS_AS(tr.write_csv(path, {"nope"}), Error);
    CHECK_FALSE(tr.has("z"));
    CHECK_THROWS_AS(tr.channel("z"), Error);
}
