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

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "greybox/dataset.hpp"
#include "greybox/estimator.hpp"
#include "greybox/model.hpp"

namespace greybox {

enum class SignalKind { Zero, Constant, Ramp, Polynomial, Multisine, FilteredRandom };

std::string to_string(SignalKind k);
SignalKind signal_kind_from_string(const std::string& s);

struct Sine {
    double amplitude = 0.0;
    double frequency = 0.0;  // rad/s
    double phase = 0.0;      // rad
};

/**
 * Vector-valued smooth signal with exact time derivatives.
 *
 *  Constant      value = offset
 *  Ramp          value = offset + slope t
 *  Polynomial    value_i = sum_k coeffs(i, k) t^k
 *  Multisine     value_i = offset_i + sum_k a_ik sin(w_ik t + phi_ik)
 *  FilteredRandom  piecewise-cubic monotone interpolation (PCHIP) of uniform
 *                random knots in [-amplitude, amplitude] spaced `knot_spacing`
 *                seconds apart; C1 and never leaves the knot range.
 */
class Signal {
public:
    Signal() = default;

    static Signal zero(int channels);
    static Signal constant(const Vector& value);
    static Signal ramp(const Vector& offset, const Vector& slope);
    // coeffs: channels x (degree + 1), column k multiplies t^k.
    static Signal polynomial(const Matrix& coeffs);
    static Signal multisine(std::vector<std::vector<Sine>> components, Vector offset = Vector());
    // `count` sines per channel, log-spaced frequencies on [w_lo, w_hi] with a
    // seeded jitter and random phases; each channel's amplitudes sum to `amplitude`.
    static Signal random_multisine(int channels, int count, double w_lo, double w_hi, double amplitude,
                                   std::uint64_t seed);
    static Signal filtered_random(int channels, double amplitude, double knot_spacing, double horizon,
                                  std::uint64_t seed);

    SignalKind kind() const { return kind_; }
    int channels() const { return channels_; }

    Vector value(double t) const;
    // d^order/dt^order; order 0 is the value.
    Vector derivative(double t, int order = 1) const;
    // Upper bound on sup_t |value_i(t)| over channels.
    double bound() const;

    // Raw parameters, for serialization.
    const Vector& offset() const { return offset_; }
    const Vector& slope() const { return slope_; }
    const Matrix& coeffs() const { return coeffs_; }
    const std::vector<std::vector<Sine>>& sines() const { return sines_; }
    double amplitude() const { return amplitude_; }
    double knot_spacing() const { return knot_spacing_; }
    double horizon() const { return horizon_; }
    std::uint64_t seed() const { return seed_; }

private:
    SignalKind kind_ = SignalKind::Zero;
    int channels_ = 0;
    Vector offset_, slope_;
    Matrix coeffs_;
    std::vector<std::vector<Sine>> sines_;
    // Filtered random.
    double amplitude_ = 0.0, knot_spacing_ = 1.0, horizon_ = 0.0;
    std::uint64_t seed_ = 0;
    Matrix knots_, knot_slopes_;  // channels x count

    Vector pchip(double t, int order) const;
};

// Channel group of a trajectory: rows are time samples.
struct Channel {
    std::string name;    // e.g. "x", "y", "u", "eta", "z", "etahat", "xhat"
    Matrix data;         // samples x width
};

class Trajectory {
public:
    std::vector<double> times;
    double dt = 0.0;
    // deque: references returned by add() survive later additions.
    std::deque<Channel> channels;

    int size() const { return static_cast<int>(times.size()); }
    bool has(const std::string& name) const;
    const Matrix& channel(const std::string& name) const;
    Matrix& add(const std::string& name, int width);

    // Header `t,<name>_1..` with the groups in `names` order (all groups if empty);
    // every stride-th sample is written.
    void write_csv(const std::string& path, const std::vector<std::string>& names = {}, int stride = 1) const;
};

/// Exogenous uncertainty: either the hidden linear law eta = Theta_a x + B_a u or
/// an explicit time signal (used to exercise the filter with polynomial inputs).
using UncertaintySource = std::variant<TrueUncertainty, Signal>;

struct PlantSignals {
    Signal u, omega, nu;
};

struct SimOptions {
    double T = 60.0;
    double dt = 1e-3;
    // Plant steps must satisfy dt * max|eig| <= dt_guard.
    double dt_guard = 1e-2;
    // Filter sub-steps h are chosen so that h * max|eig(N)| <= filter_guard.
    double filter_guard = 0.1;
};

/// Fixed-step RK4 of x' = A x + B_u u + S_eta eta + B_omega omega, y = C x + D_nu nu.
/// Channels: x, y, u, eta. Throws InvalidArgument on a too-large step and
/// NumericalFailure on blow-up.
Trajectory simulate_plant(const LtiSystem& sys, const UncertaintySource& eta, const PlantSignals& sig,
                          const Vector& x0, const SimOptions& opt);

/// Plant and filter integrated jointly on one grid; the filter sees only (u, y).
/// The filter is sub-stepped when its dynamics are faster than the guard allows.
/// Channels: x, y, u, eta, z, etahat, xhat. The filter starts from z0 (zero if empty).
Trajectory cosimulate(const LtiSystem& sys, const UncertaintySource& eta, const FilterDesign& fd,
                      const PlantSignals& sig, const Vector& x0, const SimOptions& opt, const Vector& z0 = Vector());

/// Number of filter sub-steps per grid step used by cosimulate.
int filter_substeps(const FilterDesign& fd, const SimOptions& opt);

/// Error system e' = N e - M B_omega_a omega_a + B_nu_a nu_a, e_d = C_bar_a e, of the
/// estimation error e = x_hat_a - x_a, with
/// omega_a = col[omega, eta^(r)] and nu_a = col[nu, nu'] from analytic derivatives.
/// `eta` must be a Signal. Channel: "ed".
Trajectory simulate_error_system(const FilterDesign& fd, const Signal& eta, const Signal& omega, const Signal& nu,
                                 const Vector& e0, const SimOptions& opt, int substeps = 1);

/// Samples (xhat, u, etahat) at rate_hz on the half-open window [t_min, T).
std::vector<Sample> extract_dataset(const Trajectory& traj, double rate_hz, double t_min);

struct RmseResult {
    Vector rmse;           // per output
    bool divergent = false;
    double spectral_abscissa = 0.0;  // of the model
    Trajectory truth;      // channel y
    Trajectory model;      // channel y
};

/// Noiseless output responses of the true plant and of `model` to the same u and x0.
/// An unstable model is flagged divergent; its RMSE is reported when finite.
/// With rate_hz > 0 the RMSE uses only samples at that rate, so it does not
/// depend on the integration step.
RmseResult evaluate_rmse(const LtiSystem& sys, const TrueUncertainty& tu, const LtiSystem& model, const Signal& u,
                         const Vector& x0, const SimOptions& opt, double rate_hz = 0.0);

}  // namespace greybox
