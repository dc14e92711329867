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

#include "greybox/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "greybox/analysis.hpp"

namespace greybox {

namespace {

// Platform-independent uniform draw on [0, 1).
double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double max_abs_eig(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::string to_string(SignalKind k) {
    switch (k) {
        case SignalKind::Zero: return "zero";
        case SignalKind::Constant: return "constant";
        case SignalKind::Ramp: return "ramp";
        case SignalKind::Polynomial: return "polynomial";
        case SignalKind::Multisine: return "multisine";
        case SignalKind::FilteredRandom: return "filtered-random";
    }
    return "zero";
}

SignalKind signal_kind_from_string(const std::string& s) {
    for (auto k : {SignalKind::Zero, SignalKind::Constant, SignalKind::Ramp, SignalKind::Polynomial,
                   SignalKind::Multisine, SignalKind::FilteredRandom}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown signal kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Signal

Signal Signal::zero(int channels) {
    Signal s;
    s.kind_ = SignalKind::Zero;
    s.channels_ = channels;
    return s;
}

Signal Signal::constant(const Vector& value) {
    Signal s;
    s.kind_ = SignalKind::Constant;
    s.channels_ = static_cast<int>(value.size());
    s.offset_ = value;
    return s;
}

Signal Signal::ramp(const Vector& offset, const Vector& slope) {
    if (offset.size() != slope.size()) throw Error(ErrorKind::DimensionMismatch, "ramp: offset and slope sizes differ");
    Signal s;
    s.kind_ = SignalKind::Ramp;
    s.channels_ = static_cast<int>(offset.size());
    s.offset_ = offset;
    s.slope_ = slope;
    return s;
}

Signal Signal::polynomial(const Matrix& coeffs) {
    Signal s;
    s.kind_ = SignalKind::Polynomial;
    s.channels_ = static_cast<int>(coeffs.rows());
    s.coeffs_ = coeffs;
    return s;
}

Signal Signal::multisine(std::vector<std::vector<Sine>> components, Vector offset) {
    Signal s;
    s.kind_ = SignalKind::Multisine;
    s.channels_ = static_cast<int>(components.size());
    s.sines_ = std::move(components);
    s.offset_ = offset.size() ? offset : Vector::Zero(s.channels_);
    if (s.offset_.size() != s.channels_) throw Error(ErrorKind::DimensionMismatch, "multisine: offset size");
    return s;
}

Signal Signal::random_multisine(int channels, int count, double w_lo, double w_hi, double amplitude,
                                std::uint64_t seed) {
    if (count < 1 || !(w_lo > 0.0) || !(w_hi >= w_lo)) {
        throw Error(ErrorKind::InvalidArgument, "random_multisine: need count >= 1 and 0 < w_lo <= w_hi");
    }
    std::mt19937_64 g(seed);
    std::vector<std::vector<Sine>> comp(channels);
    for (int c = 0; c < channels; ++c) {
        for (int k = 0; k < count; ++k) {
            const double frac = count == 1 ? 0.5 : static_cast<double>(k) / (count - 1);
            // Jitter keeps the frequencies incommensurate.
            const double jitter = 1.0 + 0.1 * (uniform01(g) - 0.5);
            const double w = std::clamp(w_lo * std::pow(w_hi / w_lo, frac) * jitter, w_lo, w_hi);
            comp[c].push_back({amplitude / count, w, 2.0 * std::numbers::pi * uniform01(g)});
        }
    }
    return multisine(std::move(comp));
}

Signal Signal::filtered_random(int channels, double amplitude, double knot_spacing, double horizon,
                               std::uint64_t seed) {
    if (!(knot_spacing > 0.0) || !(horizon >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "filtered_random: knot spacing must be positive");
    }
    Signal s;
    s.kind_ = SignalKind::FilteredRandom;
    s.channels_ = channels;
    s.amplitude_ = amplitude;
    s.knot_spacing_ = knot_spacing;
    s.horizon_ = horizon;
    s.seed_ = seed;
    const int count = static_cast<int>(std::ceil(horizon / knot_spacing)) + 2;
    std::mt19937_64 g(seed);
    s.knots_.resize(channels, count);
    for (int c = 0; c < channels; ++c)
        for (int k = 0; k < count; ++k) s.knots_(c, k) = amplitude * (2.0 * uniform01(g) - 1.0);

    // Fritsch-Carlson slopes: monotone pieces, hence no overshoot.
    s.knot_slopes_ = Matrix::Zero(channels, count);
    const double h = knot_spacing;
    for (int c = 0; c < channels; ++c) {
        for (int k = 0; k < count; ++k) {
            const double dl = k > 0 ? (s.knots_(c, k) - s.knots_(c, k - 1)) / h : 0.0;
            const double dr = k + 1 < count ? (s.knots_(c, k + 1) - s.knots_(c, k)) / h : 0.0;
            if (k == 0) {
                s.knot_slopes_(c, k) = 0.0;
            } else if (k + 1 == count) {
                s.knot_slopes_(c, k) = 0.0;
            } else if (dl * dr > 0.0) {
                s.knot_slopes_(c, k) = 2.0 / (1.0 / dl + 1.0 / dr);
            }
        }
    }
    return s;
}

Vector Signal::pchip(double t, int order) const {
    Vector v = Vector::Zero(channels_);
    const int count = static_cast<int>(knots_.cols());
    const double h = knot_spacing_;
    double tt = std::clamp(t, 0.0, h * (count - 1));
    if (t != tt && order > 0) return v;  // held constant outside the knot range
    int k = std::min(static_cast<int>(std::floor(tt / h)), count - 2);
    const double s = (tt - k * h) / h;
    // Hermite basis and its derivatives with respect to s.
    double h00, h10, h01, h11;
    switch (order) {
        case 0:
            h00 = 2 * s * s * s - 3 * s * s + 1; h10 = s * s * s - 2 * s * s + s;
            h01 = -2 * s * s * s + 3 * s * s;    h11 = s * s * s - s * s;
            break;
        case 1:
            h00 = 6 * s * s - 6 * s; h10 = 3 * s * s - 4 * s + 1;
            h01 = -6 * s * s + 6 * s; h11 = 3 * s * s - 2 * s;
            break;
        case 2:
            h00 = 12 * s - 6; h10 = 6 * s - 4; h01 = -12 * s + 6; h11 = 6 * s - 2;
            break;
        case 3:
            h00 = 12; h10 = 6; h01 = -12; h11 = 6;
            break;
        default:
            return v;
    }
    const double scale = std::pow(h, -order);
    for (int c = 0; c < channels_; ++c) {
        v(c) = scale * (h00 * knots_(c, k) + h10 * h * knot_slopes_(c, k) + h01 * knots_(c, k + 1) +
                        h11 * h * knot_slopes_(c, k + 1));
    }
    return v;
}

Vector Signal::value(double t) const { return derivative(t, 0); }

Vector Signal::derivative(double t, int order) const {
    if (order < 0) throw Error(ErrorKind::InvalidArgument, "Signal::derivative: negative order");
    Vector v = Vector::Zero(channels_);
    switch (kind_) {
        case SignalKind::Zero:
            break;
        case SignalKind::Constant:
            if (order == 0) v = offset_;
            break;
        case SignalKind::Ramp:
            if (order == 0) v = offset_ + slope_ * t;
            else if (order == 1) v = slope_;
            break;
        case SignalKind::Polynomial:
            for (int i = 0; i < channels_; ++i) {
                double acc = 0.0;
                for (int k = static_cast<int>(coeffs_.cols()) - 1; k >= order; --k) {
                    double f = 1.0;
                    for (int j = 0; j < order; ++j) f *= k - j;
                    acc = acc * t + f * coeffs_(i, k);
                }
                v(i) = acc;
            }
            break;
        case SignalKind::Multisine:
            for (int i = 0; i < channels_; ++i) {
                double acc = order == 0 ? offset_(i) : 0.0;
                for (const Sine& s : sines_[i]) {
                    acc += s.amplitude * std::pow(s.frequency, order) *
                           std::sin(s.frequency * t + s.phase + order * std::numbers::pi / 2);
                }
                v(i) = acc;
            }
            break;
        case SignalKind::FilteredRandom:
            v = pchip(t, order);
            break;
    }
    return v;
}

double Signal::bound() const {
    switch (kind_) {
        case SignalKind::Zero: return 0.0;
        case SignalKind::Constant: return channels_ ? offset_.cwiseAbs().maxCoeff() : 0.0;
        case SignalKind::Ramp:
        case SignalKind::Polynomial: return std::numeric_limits<double>::infinity();
        case SignalKind::Multisine: {
            double b = 0.0;
            for (int i = 0; i < channels_; ++i) {
                double s = std::abs(offset_(i));
                for (const Sine& c : sines_[i]) s += std::abs(c.amplitude);
                b = std::max(b, s);
            }
            return b;
        }
        case SignalKind::FilteredRandom: return std::abs(amplitude_);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Trajectory

bool Trajectory::has(const std::string& name) const {
    return std::any_of(channels.begin(), channels.end(), [&](const Channel& c) { return c.name == name; });
}

const Matrix& Trajectory::channel(const std::string& name) const {
    for (const auto& c : channels)
        if (c.name == name) return c.data;
    throw Error(ErrorKind::InvalidArgument, "trajectory has no channel '" + name + "'");
}

Matrix& Trajectory::add(const std::string& name, int width) {
    channels.push_back({name, Matrix::Zero(size(), width)});
    return channels.back().data;
}

void Trajectory::write_csv(const std::string& path, const std::vector<std::string>& names, int stride) const {
    if (stride < 1) throw Error(ErrorKind::InvalidArgument, "write_csv: stride must be positive");
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write trajectory to '" + path + "'");
    std::vector<const Channel*> cols;
    if (names.empty()) {
        for (const auto& c : channels) cols.push_back(&c);
    } else {
        for (const auto& n : names) {
            auto it = std::find_if(channels.begin(), channels.end(), [&](const Channel& c) { return c.name == n; });
            if (it == channels.end()) throw Error(ErrorKind::InvalidArgument, "trajectory has no channel '" + n + "'");
            cols.push_back(&*it);
        }
    }
    os << "t";
    for (const Channel* c : cols)
        for (int j = 0; j < c->data.cols(); ++j) os << ',' << c->name << '_' << j + 1;
    os << '\n' << std::setprecision(17);
    for (int k = 0; k < size(); k += stride) {
        os << times[k];
        for (const Channel* c : cols)
            for (int j = 0; j < c->data.cols(); ++j) os << ',' << c->data(k, j);
        os << '\n';
    }
    if (!os) throw Error(ErrorKind::Io, "error while writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

int grid_steps(const SimOptions& opt) {
    if (!(opt.T > 0.0) || !(opt.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "simulation needs T > 0 and dt > 0");
    const double k = opt.T / opt.dt;
    const long steps = std::lround(k);
    if (std::abs(k - steps) > 1e-6 * std::max(1.0, k)) {
        throw Error(ErrorKind::InvalidArgument, "dt = " + fmt(opt.dt) + " does not divide T = " + fmt(opt.T));
    }
    return static_cast<int>(steps);
}

// Closed-loop plant data: x' = Ax x + Bx u + S_eta eta_ext(t) + B_omega omega.
struct PlantModel {
    Matrix Ax, Bx;           // with the linear uncertainty folded in
    Matrix Theta, Bt;        // eta = Theta x + Bt u (zero when exogenous)
    const Signal* eta_signal = nullptr;
    const LtiSystem* sys = nullptr;

    Vector eta(double t, const Vector& x, const Vector& u) const {
        if (eta_signal) return eta_signal->value(t);
        Vector e = Theta * x;
        if (Bt.cols() > 0) e += Bt * u;
        return e;
    }
    Vector rhs(double t, const Vector& x, const Vector& u, const Vector& w) const {
        Vector d = Ax * x;
        if (Bx.cols() > 0) d += Bx * u;
        if (eta_signal) d += sys->S_eta() * eta_signal->value(t);
        if (w.size() > 0) d += sys->B_omega() * w;
        return d;
    }
};

PlantModel plant_model(const LtiSystem& sys, const UncertaintySource& src) {
    PlantModel pm;
    pm.sys = &sys;
    const auto& d = sys.dims();
    if (const auto* tu = std::get_if<TrueUncertainty>(&src)) {
        tu->check_against(sys);
        pm.Theta = tu->Theta_a;
        pm.Bt = tu->B_a;
        pm.Ax = sys.A() + sys.S_eta() * tu->Theta_a;
        pm.Bx = sys.B_u() + sys.S_eta() * tu->B_a;
    } else {
        pm.eta_signal = &std::get<Signal>(src);
        if (pm.eta_signal->channels() != d.n_eta) {
            throw Error(ErrorKind::DimensionMismatch, "uncertainty signal has " +
                                                          std::to_string(pm.eta_signal->channels()) +
                                                          " channels, plant expects " + std::to_string(d.n_eta));
        }
        pm.Theta = Matrix::Zero(d.n_eta, d.n);
        pm.Bt = Matrix::Zero(d.n_eta, d.l);
        pm.Ax = sys.A();
        pm.Bx = sys.B_u();
    }
    return pm;
}

void check_signals(const LtiSystem& sys, const PlantSignals& sig) {
    const auto& d = sys.dims();
    auto chk = [](const Signal& s, int want, const char* what) {
        if (s.channels() != want) {
            throw Error(ErrorKind::DimensionMismatch, std::string(what) + " signal has " +
                                                          std::to_string(s.channels()) + " channels, plant expects " +
                                                          std::to_string(want));
        }
    };
    chk(sig.u, d.l, "input");
    chk(sig.omega, d.n_omega, "disturbance");
    chk(sig.nu, d.m_nu, "noise");
}

void check_step(const Matrix& A, double h, double guard, const std::string& what) {
    const double rho = max_abs_eig(A);
    if (h * rho > guard) {
        throw Error(ErrorKind::InvalidArgument, what + ": step " + fmt(h) + " s is too large for the fastest mode (|eig| = " +
                                                    fmt(rho) + "); use dt <= " + fmt(guard / rho));
    }
}

void check_finite(const Vector& v, double t, const std::string& what) {
    if (!v.allFinite() || v.norm() > 1e12) {
        throw Error(ErrorKind::NumericalFailure, what + ": state diverged at t = " + fmt(t) + " s");
    }
}

template <class F>
Vector rk4(const F& f, double t, const Vector& x, double h) {
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = f(t + h, x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory simulate_plant(const LtiSystem& sys, const UncertaintySource& eta, const PlantSignals& sig,
                          const Vector& x0, const SimOptions& opt) {
    const auto& d = sys.dims();
    if (x0.size() != d.n) throw Error(ErrorKind::DimensionMismatch, "simulate_plant: x0 has wrong size");
    check_signals(sys, sig);
    const PlantModel pm = plant_model(sys, eta);
    check_step(pm.Ax, opt.dt, opt.dt_guard, "simulate_plant");
    const int K = grid_steps(opt);

    Trajectory tr;
    tr.dt = opt.dt;
    tr.times.resize(K + 1);
    for (int k = 0; k <= K; ++k) tr.times[k] = k * opt.dt;
    Matrix& X = tr.add("x", d.n);
    Matrix& Y = tr.add("y", d.m);
    Matrix& U = tr.add("u", d.l);
    Matrix& H = tr.add("eta", d.n_eta);

    auto f = [&](double t, const Vector& x) { return pm.rhs(t, x, sig.u.value(t), sig.omega.value(t)); };
    Vector x = x0;
    for (int k = 0; k <= K; ++k) {
        const double t = tr.times[k];
        const Vector u = sig.u.value(t);
        X.row(k) = x.transpose();
        Y.row(k) = (sys.C() * x + sys.D_nu() * sig.nu.value(t)).transpose();
        U.row(k) = u.transpose();
        H.row(k) = pm.eta(t, x, u).transpose();
        if (k == K) break;
        x = rk4(f, t, x, opt.dt);
        check_finite(x, t + opt.dt, "simulate_plant");
    }
    return tr;
}

int filter_substeps(const FilterDesign& fd, const SimOptions& opt) {
    const double rho = max_abs_eig(fd.N);
    return std::max(1, static_cast<int>(std::ceil(opt.dt * rho / opt.filter_guard - 1e-12)));
}

Trajectory cosimulate(const LtiSystem& sys, const UncertaintySource& eta, const FilterDesign& fd,
                      const PlantSignals& sig, const Vector& x0, const SimOptions& opt, const Vector& z0) {
    const auto& d = sys.dims();
    const int n = d.n;
    const int na = fd.aug.n_a;
    if (x0.size() != n) throw Error(ErrorKind::DimensionMismatch, "cosimulate: x0 has wrong size");
    if (fd.aug.dims != d) throw Error(ErrorKind::DimensionMismatch, "cosimulate: filter designed for another plant");
    check_signals(sys, sig);
    const PlantModel pm = plant_model(sys, eta);
    check_step(pm.Ax, opt.dt, opt.dt_guard, "cosimulate");
    const int sub = filter_substeps(fd, opt);
    const double h = opt.dt / sub;
    const int K = grid_steps(opt);

    Trajectory tr;
    tr.dt = opt.dt;
    tr.times.resize(K + 1);
    for (int k = 0; k <= K; ++k) tr.times[k] = k * opt.dt;
    Matrix& X = tr.add("x", n);
    Matrix& Y = tr.add("y", d.m);
    Matrix& U = tr.add("u", d.l);
    Matrix& H = tr.add("eta", d.n_eta);
    Matrix& Z = tr.add("z", na);
    Matrix& EH = tr.add("etahat", d.n_eta);
    Matrix& XH = tr.add("xhat", n);

    auto output = [&](double t, const Vector& x) -> Vector { return sys.C() * x + sys.D_nu() * sig.nu.value(t); };
    auto f = [&](double t, const Vector& s) -> Vector {
        const Vector x = s.head(n);
        const Vector z = s.tail(na);
        const Vector u = sig.u.value(t);
        Vector ds(n + na);
        ds.head(n) = pm.rhs(t, x, u, sig.omega.value(t));
        Vector dz = fd.N * z + fd.L * output(t, x);
        if (fd.G.cols() > 0) dz += fd.G * u;
        ds.tail(na) = dz;
        return ds;
    };

    Vector s(n + na);
    s.head(n) = x0;
    s.tail(na) = z0.size() ? z0 : Vector::Zero(na);
    if (s.tail(na).size() != na) throw Error(ErrorKind::DimensionMismatch, "cosimulate: z0 has wrong size");
    for (int k = 0; k <= K; ++k) {
        const double t = tr.times[k];
        const Vector x = s.head(n);
        const Vector u = sig.u.value(t);
        const Vector y = output(t, x);
        const FilterState fs = make_filter_state(fd, s.tail(na), y, t);
        X.row(k) = x.transpose();
        Y.row(k) = y.transpose();
        U.row(k) = u.transpose();
        H.row(k) = pm.eta(t, x, u).transpose();
        Z.row(k) = fs.z.transpose();
        EH.row(k) = fs.eta_hat.transpose();
        XH.row(k) = fs.x_hat_s.transpose();
        if (k == K) break;
        for (int j = 0; j < sub; ++j) s = rk4(f, t + j * h, s, h);
        check_finite(s, t + opt.dt, "cosimulate");
    }
    return tr;
}

Trajectory simulate_error_system(const FilterDesign& fd, const Signal& eta, const Signal& omega, const Signal& nu,
                                 const Vector& e0, const SimOptions& opt, int substeps) {
    const int na = fd.aug.n_a;
    const int r = fd.aug.r;
    if (e0.size() != na) throw Error(ErrorKind::DimensionMismatch, "simulate_error_system: e0 has wrong size");
    const Matrix MBw = fd.M * fd.aug.B_omega_a;
    const int K = grid_steps(opt);
    const double h = opt.dt / std::max(1, substeps);

    auto f = [&](double t, const Vector& e) -> Vector {
        Vector wa(omega.channels() + eta.channels());
        wa << omega.value(t), eta.derivative(t, r);
        Vector va(2 * nu.channels());
        va << nu.value(t), nu.derivative(t, 1);
        return fd.N * e - MBw * wa + fd.B_nu_a * va;
    };

    Trajectory tr;
    tr.dt = opt.dt;
    tr.times.resize(K + 1);
    for (int k = 0; k <= K; ++k) tr.times[k] = k * opt.dt;
    Matrix& ED = tr.add("ed", static_cast<int>(fd.aug.C_bar_a.rows()));
    Vector e = e0;
    for (int k = 0; k <= K; ++k) {
        ED.row(k) = (fd.aug.C_bar_a * e).transpose();
        if (k == K) break;
        for (int j = 0; j < std::max(1, substeps); ++j) e = rk4(f, tr.times[k] + j * h, e, h);
        check_finite(e, tr.times[k] + opt.dt, "simulate_error_system");
    }
    return tr;
}

std::vector<Sample> extract_dataset(const Trajectory& traj, double rate_hz, double t_min) {
    if (!(rate_hz > 0.0)) throw Error(ErrorKind::InvalidArgument, "extract_dataset: rate must be positive");
    const double ratio = 1.0 / (rate_hz * traj.dt);
    const long stride = std::lround(ratio);
    if (stride < 1 || std::abs(ratio - stride) > 1e-9 * ratio) {
        throw Error(ErrorKind::InvalidArgument, "extract_dataset: rate " + fmt(rate_hz) +
                                                    " Hz does not divide the grid rate " + fmt(1.0 / traj.dt) + " Hz");
    }
    const Matrix& XH = traj.channel("xhat");
    const Matrix& U = traj.channel("u");
    const Matrix& EH = traj.channel("etahat");
    const double T = traj.times.empty() ? 0.0 : traj.times.back();
    const double eps = 1e-9 * traj.dt;
    std::vector<Sample> out;
    for (int k = 0; k < traj.size(); k += static_cast<int>(stride)) {
        const double t = traj.times[k];
        if (t < t_min - eps || t >= T - eps) continue;
        out.push_back({XH.row(k).transpose(), U.row(k).transpose(), EH.row(k).transpose(), t});
    }
    if (out.empty()) {
        throw Error(ErrorKind::InvalidArgument, "extract_dataset: no samples in [" + fmt(t_min) + ", " + fmt(T) + ")");
    }
    return out;
}

RmseResult evaluate_rmse(const LtiSystem& sys, const TrueUncertainty& tu, const LtiSystem& model, const Signal& u,
                         const Vector& x0, const SimOptions& opt, double rate_hz) {
    if (model.dims().m != sys.dims().m || model.dims().n != sys.dims().n || model.dims().l != sys.dims().l) {
        throw Error(ErrorKind::DimensionMismatch, "evaluate_rmse: model and plant dimensions differ");
    }
    RmseResult res;
    PlantSignals st{u, Signal::zero(sys.dims().n_omega), Signal::zero(sys.dims().m_nu)};
    res.truth = simulate_plant(sys, tu, st, x0, opt);

    const auto& md = model.dims();
    const TrueUncertainty none{Matrix::Zero(md.n_eta, md.n), Matrix::Zero(md.n_eta, md.l)};
    PlantSignals sm{u, Signal::zero(md.n_omega), Signal::zero(md.m_nu)};
    res.spectral_abscissa = spectral_abscissa(model.A());
    res.divergent = res.spectral_abscissa >= 0.0;
    const int m = sys.dims().m;
    try {
        res.model = simulate_plant(model, none, sm, x0, opt);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalFailure) throw;
        res.divergent = true;
        res.rmse = Vector::Constant(m, std::numeric_limits<double>::infinity());
        return res;
    }
    long stride = 1;
    if (rate_hz > 0.0) {
        const double ratio = 1.0 / (rate_hz * opt.dt);
        stride = std::lround(ratio);
        if (stride < 1 || std::abs(ratio - stride) > 1e-9 * ratio) {
            throw Error(ErrorKind::InvalidArgument, "evaluate_rmse: rate " + fmt(rate_hz) +
                                                        " Hz does not divide the grid rate " + fmt(1.0 / opt.dt) + " Hz");
        }
    }
    const Matrix full = res.model.channel("y") - res.truth.channel("y");
    Matrix diff((full.rows() + stride - 1) / stride, full.cols());
    for (Eigen::Index k = 0; k < diff.rows(); ++k) diff.row(k) = full.row(k * stride);
    res.rmse = (diff.colwise().squaredNorm() / static_cast<double>(diff.rows())).cwiseSqrt().transpose();
    return res;
}

}  // namespace greybox
