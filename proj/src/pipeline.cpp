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

#include "greybox/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace greybox::pipeline {

namespace fs = std::filesystem;
using io::Json;

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorKind::InvalidArgument, "scenario: " + what); }

// Rejects unknown keys so that a typo does not silently fall back to a default.
void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad_config(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) bad_config("unknown key '" + key + "' in " + where);
    }
}

double positive(const Json& j, const char* key, double def, const std::string& where) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_number()) bad_config(where + "." + key + " must be a number");
    const double v = j.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) bad_config(where + "." + key + " must be positive, got " + std::to_string(v));
    return v;
}

std::vector<double> positive_list(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) bad_config(what + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) bad_config(what + " entries must be positive numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

const std::vector<std::string> kRoutes{"thm1", "thm2", "ls"};

LtiSystem bare_model(const LtiSystem& sys) {
    const auto& d = sys.dims();
    UncertaintyModel none{Matrix::Zero(0, d.n), Matrix::Zero(0, d.l), Matrix::Zero(d.n, 0), Matrix(),
                          Provenance::LeastSquares};
    return extended_model(sys, none);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

ScenarioConfig scenario_from_json(const Json& j, const std::string& base_dir) {
    check_keys(j, "scenario", {"version", "name", "plant", "filter", "signals", "simulation", "dataset", "learner",
                               "seed", "dump_conic", "reference_rmse"});
    ScenarioConfig c;
    if (!j.contains("version")) bad_config("missing 'version'");
    c.version = j.at("version").get<int>();
    if (c.version != kScenarioVersion) {
        bad_config("unsupported version " + std::to_string(c.version) + " (expected " +
                   std::to_string(kScenarioVersion) + ")");
    }
    c.name = j.value("name", "");
    if (!j.contains("plant") || !j.at("plant").is_string()) bad_config("'plant' must name a plant JSON file");
    fs::path plant = j.at("plant").get<std::string>();
    if (plant.is_relative()) plant = fs::path(base_dir) / plant;
    c.plant_path = plant.lexically_normal().string();

    if (j.contains("filter")) {
        const Json& f = j.at("filter");
        check_keys(f, "filter", {"r", "epsilon", "gamma_max", "gamma_max_grid"});
        c.r = f.value("r", c.r);
        if (c.r < 1 || c.r > 8) bad_config("filter.r must lie in [1, 8]");
        c.epsilon = positive(f, "epsilon", c.epsilon, "filter");
        if (f.contains("gamma_max") && !f.at("gamma_max").is_null()) c.gamma_max = positive(f, "gamma_max", 0.0, "filter");
        if (f.contains("gamma_max_grid")) c.gamma_max_grid = positive_list(f.at("gamma_max_grid"), "filter.gamma_max_grid");
    }

    const Json zero = {{"kind", "zero"}};
    if (j.contains("signals")) {
        const Json& s = j.at("signals");
        check_keys(s, "signals", {"u_train", "u_test", "omega", "nu"});
        c.u_train = s.value("u_train", zero);
        c.u_test = s.value("u_test", zero);
        c.omega = s.value("omega", zero);
        c.nu = s.value("nu", zero);
    } else {
        c.u_train = c.u_test = c.omega = c.nu = zero;
    }

    if (j.contains("simulation")) {
        const Json& s = j.at("simulation");
        check_keys(s, "simulation", {"T_train", "T_test", "dt", "dt_guard", "filter_guard", "x0", "output_rate_hz"});
        c.T_train = positive(s, "T_train", c.T_train, "simulation");
        c.T_test = positive(s, "T_test", c.T_test, "simulation");
        c.sim.dt = positive(s, "dt", c.sim.dt, "simulation");
        c.sim.dt_guard = positive(s, "dt_guard", c.sim.dt_guard, "simulation");
        c.sim.filter_guard = positive(s, "filter_guard", c.sim.filter_guard, "simulation");
        c.output_rate_hz = positive(s, "output_rate_hz", c.output_rate_hz, "simulation");
        if (s.contains("x0")) c.x0 = io::vector_from_json(s.at("x0"), "simulation.x0");
    }

    if (j.contains("dataset")) {
        const Json& d = j.at("dataset");
        check_keys(d, "dataset", {"rate_hz", "t_min"});
        c.rate_hz = positive(d, "rate_hz", c.rate_hz, "dataset");
        c.t_min = d.value("t_min", c.t_min);
    }
    if (!(c.t_min >= 0.0) || c.t_min >= c.T_train) bad_config("dataset.t_min must lie in [0, T_train)");

    if (j.contains("learner")) {
        const Json& l = j.at("learner");
        check_keys(l, "learner", {"routes", "include_input_gain", "certificate_bound", "gamma_grid"});
        if (l.contains("routes")) {
            c.routes.clear();
            for (const auto& r : l.at("routes")) {
                for (const auto& x : parse_routes(r.get<std::string>())) c.routes.push_back(x);
            }
            if (c.routes.empty()) bad_config("learner.routes is empty");
        }
        c.learner.include_input_gain = l.value("include_input_gain", c.learner.include_input_gain);
        c.learner.certificate_bound = positive(l, "certificate_bound", c.learner.certificate_bound, "learner");
        if (l.contains("gamma_grid")) c.learner.gamma_grid = positive_list(l.at("gamma_grid"), "learner.gamma_grid");
    }

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) bad_config("seed must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.dump_conic = j.value("dump_conic", false);
    if (j.contains("reference_rmse")) {
        const Json& r = j.at("reference_rmse");
        check_keys(r, "reference_rmse", {"no-model", "thm1", "thm2", "ls"});
        for (const auto& [model, values] : r.items()) c.reference_rmse[model] = positive_list(values, "reference_rmse." + model);
    }
    return c;
}

Json to_json(const ScenarioConfig& c) {
    Json j;
    j["version"] = c.version;
    j["name"] = c.name;
    j["plant"] = c.plant_path;
    j["filter"] = {{"r", c.r},
                   {"epsilon", c.epsilon},
                   {"gamma_max", c.gamma_max ? Json(*c.gamma_max) : Json(nullptr)},
                   {"gamma_max_grid", c.gamma_max_grid}};
    j["signals"] = {{"u_train", c.u_train}, {"u_test", c.u_test}, {"omega", c.omega}, {"nu", c.nu}};
    j["simulation"] = {{"T_train", c.T_train},
                       {"T_test", c.T_test},
                       {"dt", c.sim.dt},
                       {"dt_guard", c.sim.dt_guard},
                       {"filter_guard", c.sim.filter_guard},
                       {"output_rate_hz", c.output_rate_hz},
                       {"x0", io::to_json(c.x0)}};
    j["dataset"] = {{"rate_hz", c.rate_hz}, {"t_min", c.t_min}};
    j["learner"] = {{"routes", c.routes},
                    {"include_input_gain", c.learner.include_input_gain},
                    {"certificate_bound", c.learner.certificate_bound},
                    {"gamma_grid", c.learner.gamma_grid}};
    j["seed"] = c.seed;
    j["dump_conic"] = c.dump_conic;
    if (!c.reference_rmse.empty()) j["reference_rmse"] = c.reference_rmse;
    return j;
}

ScenarioConfig load_scenario(const std::string& path) {
    const Json j = io::read_json(path);
    try {
        return scenario_from_json(j, fs::path(path).parent_path().string());
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, "scenario '" + path + "': " + e.what());
    } catch (const Error& e) {
        throw Error(e.kind(), "'" + path + "': " + e.what());
    }
}

Signal resolve_signal(const Json& spec, int channels, std::uint64_t seed, double horizon, const std::string& what) {
    if (!spec.is_object() || !spec.contains("kind")) bad_config(what + ": signal spec needs a 'kind'");
    const std::string kind = spec.at("kind").get<std::string>();
    const std::uint64_t s = seed + spec.value("seed_offset", std::uint64_t{0});
    Signal sig;
    if (kind == "zero") {
        sig = Signal::zero(channels);
    } else if (kind == "random_multisine") {
        check_keys(spec, what, {"kind", "count", "w_lo", "w_hi", "amplitude", "seed_offset"});
        const double lo = positive(spec, "w_lo", 0.1, what), hi = positive(spec, "w_hi", 10.0, what);
        if (hi < lo) bad_config(what + ": w_hi < w_lo");
        sig = Signal::random_multisine(channels, spec.value("count", 6), lo, hi, spec.value("amplitude", 1.0), s);
    } else if (kind == "random_filtered") {
        check_keys(spec, what, {"kind", "amplitude", "knot_spacing", "seed_offset"});
        sig = Signal::filtered_random(channels, spec.value("amplitude", 1.0), positive(spec, "knot_spacing", 1.0, what),
                                      horizon, s);
    } else {
        sig = io::signal_from_json(spec, what);
    }
    if (sig.channels() != channels) {
        throw Error(ErrorKind::DimensionMismatch, what + ": signal has " + std::to_string(sig.channels()) +
                                                      " channels, the plant expects " + std::to_string(channels));
    }
    return sig;
}

std::vector<std::string> parse_routes(const std::string& route) {
    if (route == "all") return kRoutes;
    for (const auto& r : kRoutes) {
        if (r == route) return {r};
    }
    throw Error(ErrorKind::InvalidArgument, "unknown route '" + route + "' (expected thm1, thm2, ls or all)");
}

// ---------------------------------------------------------------------------
// Context

Context::Context(ScenarioConfig c, PlantDescription p, std::string out)
    : cfg(std::move(c)), plant(std::move(p)), out_dir(std::move(out)) {
    const int n = plant.system.dims().n;
    if (cfg.x0.size() != 0 && cfg.x0.size() != n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "simulation.x0 has " + std::to_string(cfg.x0.size()) + " entries, the plant has " + std::to_string(n) +
                        " states");
    }
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + out_dir + "': " + ec.message());
    }
    if (cfg.dump_conic) {
        cfg.learner.on_problem = [dir = out_dir](const std::string& label, const sdp::Problem& p) {
            std::ofstream os((fs::path(dir) / ("conic_" + label + ".txt")).string());
            p.canonicalize().dump(os);
        };
    }
}

Vector Context::x0() const { return cfg.x0.size() ? cfg.x0 : Vector(Vector::Zero(plant.system.dims().n)); }

PlantSignals Context::training_signals() const {
    const auto& d = plant.system.dims();
    return {resolve_signal(cfg.u_train, d.l, cfg.seed, cfg.T_train, "signals.u_train"),
            resolve_signal(cfg.omega, d.n_omega, cfg.seed, cfg.T_train, "signals.omega"),
            resolve_signal(cfg.nu, d.m_nu, cfg.seed, cfg.T_train, "signals.nu")};
}

Signal Context::test_input() const {
    return resolve_signal(cfg.u_test, plant.system.dims().l, cfg.seed, cfg.T_test, "signals.u_test");
}

SimOptions Context::sim(double T) const {
    SimOptions s = cfg.sim;
    s.T = T;
    return s;
}

const TrueUncertainty& Context::truth() const {
    if (!plant.truth) {
        throw Error(ErrorKind::InvalidArgument, "plant '" + cfg.plant_path + "' has no true_uncertainty; cannot evaluate");
    }
    return *plant.truth;
}

std::string Context::path(const std::string& file) const { return (fs::path(out_dir) / file).string(); }

Context make_context(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    ScenarioConfig cfg = load_scenario(config_path);
    if (seed) cfg.seed = *seed;
    PlantDescription plant = io::read_plant(cfg.plant_path);
    return Context(std::move(cfg), std::move(plant), out_dir);
}

namespace {

UncertaintySource eta_source(const Context& ctx) {
    if (ctx.plant.truth) return *ctx.plant.truth;
    const auto& d = ctx.plant.system.dims();
    return TrueUncertainty{Matrix::Zero(d.n_eta, d.n), Matrix::Zero(d.n_eta, d.l)};
}

int output_stride(const Context& ctx) {
    return std::max(1, static_cast<int>(std::lround(1.0 / (ctx.cfg.output_rate_hz * ctx.cfg.sim.dt))));
}

bool writes(const Context& ctx) { return !ctx.out_dir.empty(); }

}  // namespace

// ---------------------------------------------------------------------------
// Steps

Trajectory run_simulate(const Context& ctx) {
    const PlantSignals sig = ctx.training_signals();
    Trajectory tr = simulate_plant(ctx.plant.system, eta_source(ctx), sig, ctx.x0(), ctx.sim(ctx.cfg.T_train));
    if (writes(ctx)) {
        tr.write_csv(ctx.path("train_trajectory.csv"), {"x", "y", "u", "eta"}, output_stride(ctx));
        Json meta;
        meta["scenario"] = to_json(ctx.cfg);
        meta["seed"] = ctx.cfg.seed;
        meta["samples_total"] = tr.size();
        meta["csv_stride"] = output_stride(ctx);
        meta["signals"] = {{"u", io::to_json(sig.u)}, {"omega", io::to_json(sig.omega)}, {"nu", io::to_json(sig.nu)}};
        io::write_json(ctx.path("simulate_meta.json"), meta);
    }
    return tr;
}

FilterDesign run_design_filter(const Context& ctx) {
    const AugmentedSystem aug = augment(ctx.plant.system, ctx.cfg.r);
    FilterOptions fo;
    if (ctx.cfg.dump_conic) {
        fo.on_problem = [&ctx](const std::string& label, const sdp::Problem& p) {
            std::ofstream os(ctx.path("conic_filter-" + label + ".txt"));
            p.canonicalize().dump(os);
        };
    }
    if (ctx.cfg.gamma_max) {
        FilterDesign fd = design_filter(aug, ctx.cfg.epsilon, *ctx.cfg.gamma_max, fo);
        if (writes(ctx)) io::write_json(ctx.path("filter_design.json"), io::to_json(fd));
        return fd;
    }
    std::vector<GammaMaxTrial> trials;
    FilterDesign fd = design_filter_sweep(aug, ctx.cfg.epsilon, ctx.cfg.gamma_max_grid, fo, &trials);
    if (writes(ctx)) {
        io::write_json(ctx.path("filter_design.json"), io::to_json(fd));
        Json sweep = Json::array();
        for (const auto& t : trials) {
            sweep.push_back({{"gamma_max", t.gamma_max},
                             {"feasible", t.feasible},
                             {"lambda_star", t.lambda_star},
                             {"message", t.message}});
        }
        io::write_json(ctx.path("gamma_max_sweep.json"), sweep);
    }
    return fd;
}

FilterDesign load_or_design_filter(const Context& ctx) {
    if (writes(ctx) && fs::exists(ctx.path("filter_design.json"))) {
        const Json j = io::read_json(ctx.path("filter_design.json"));
        try {
            return io::filter_design_from_json(j, ctx.plant.system);
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::Io, "'" + ctx.path("filter_design.json") + "': " + e.what());
        }
    }
    return run_design_filter(ctx);
}

LearnOutput run_learn(const Context& ctx, const FilterDesign& fd, const std::vector<std::string>& routes) {
    const LtiSystem& sys = ctx.plant.system;
    LearnOutput out;
    out.trajectory = cosimulate(sys, eta_source(ctx), fd, ctx.training_signals(), ctx.x0(), ctx.sim(ctx.cfg.T_train));
    out.samples = extract_dataset(out.trajectory, ctx.cfg.rate_hz, ctx.cfg.t_min);
    if (writes(ctx)) {
        out.trajectory.write_csv(ctx.path("filter_trajectory.csv"), {"z", "etahat", "xhat"}, output_stride(ctx));
        write_samples_csv(ctx.path("dataset.csv"), out.samples);
    }
    std::optional<DataMatrix> lifted, plain;
    for (const auto& route : routes) {
        LearnReport rep;
        if (route == "thm1") {
            if (!lifted) lifted = build_data_matrix(out.samples, sys, true);
            rep = learn_cost_modified(sys, *lifted, ctx.cfg.learner);
        } else {
            if (!plain) plain = build_data_matrix(out.samples, sys, false);
            rep = route == "thm2" ? learn_constraint_modified(sys, *plain, ctx.cfg.learner)
                                  : learn_least_squares(sys, *plain, ctx.cfg.learner);
        }
        if (writes(ctx)) io::write_json(ctx.path("learn_" + route + ".json"), io::to_json(rep));
        out.reports.emplace(route, std::move(rep));
    }
    return out;
}

const EvaluationRow* Evaluation::find(const std::string& model) const {
    for (const auto& r : rows) {
        if (r.model == model) return &r;
    }
    return nullptr;
}

std::map<std::string, UncertaintyModel> load_models(const Context& ctx, const std::vector<std::string>& routes) {
    std::map<std::string, UncertaintyModel> models;
    for (const auto& route : routes) {
        const std::string p = ctx.path("learn_" + route + ".json");
        if (!fs::exists(p)) throw Error(ErrorKind::Io, "missing '" + p + "'; run `learn` first");
        try {
            models.emplace(route, io::model_from_learn_report(io::read_json(p)));
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::Io, "'" + p + "': " + e.what());
        }
    }
    return models;
}

Evaluation run_evaluate(const Context& ctx, const std::map<std::string, UncertaintyModel>& models) {
    const LtiSystem& sys = ctx.plant.system;
    const TrueUncertainty& tu = ctx.truth();
    const Signal u = ctx.test_input();
    const SimOptions so = ctx.sim(ctx.cfg.T_test);
    const Vector x0 = ctx.x0();

    Evaluation ev;
    ev.rows.push_back({"no-model", evaluate_rmse(sys, tu, bare_model(sys), u, x0, so, ctx.cfg.rate_hz)});
    for (const auto& route : kRoutes) {
        auto it = models.find(route);
        if (it == models.end()) continue;
        ev.rows.push_back({route, evaluate_rmse(sys, tu, extended_model(sys, it->second), u, x0, so, ctx.cfg.rate_hz)});
    }
    if (!writes(ctx)) return ev;

    const int m = sys.dims().m;
    {
        std::ofstream os(ctx.path("rmse.csv"));
        if (!os) throw Error(ErrorKind::Io, "cannot write '" + ctx.path("rmse.csv") + "'");
        os << "model";
        for (int k = 0; k < m; ++k) os << ",rmse_y" << k + 1;
        os << ",spectral_abscissa,status\n" << std::setprecision(10);
        for (const auto& r : ev.rows) {
            os << r.model;
            for (int k = 0; k < m; ++k) os << ',' << r.result.rmse(k);
            os << ',' << r.result.spectral_abscissa << ',' << (r.result.divergent ? "divergent" : "stable") << '\n';
        }
    }
    Json table = Json::array();
    for (const auto& r : ev.rows) {
        table.push_back({{"model", r.model},
                         {"rmse", io::to_json(r.result.rmse)},
                         {"spectral_abscissa", r.result.spectral_abscissa},
                         {"divergent", r.result.divergent}});
    }
    io::write_json(ctx.path("rmse.json"), {{"seed", ctx.cfg.seed}, {"T_test", ctx.cfg.T_test}, {"rows", table}});

    // One CSV per output; missing models are written as nan.
    const Trajectory& truth = ev.rows.front().result.truth;
    const int stride = output_stride(ctx);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < m; ++k) {
        const std::string p = ctx.path("plot_y" + std::to_string(k + 1) + ".csv");
        std::ofstream os(p);
        if (!os) throw Error(ErrorKind::Io, "cannot write '" + p + "'");
        os << "t,y_true,y_no-model,y_thm1,y_thm2,y_ls\n" << std::setprecision(12);
        const Matrix& yt = truth.channel("y");
        for (int i = 0; i < truth.size(); i += stride) {
            os << truth.times[i] << ',' << yt(i, k);
            for (const char* name : {"no-model", "thm1", "thm2", "ls"}) {
                const EvaluationRow* r = ev.find(name);
                const bool have = r && r->result.model.has("y") && r->result.model.size() == truth.size();
                os << ',' << (have ? r->result.model.channel("y")(i, k) : nan);
            }
            os << '\n';
        }
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Reproduction

bool ReproduceResult::all_pass() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return !checks.empty();
}

namespace {

std::vector<Check> learner_checks(const LearnOutput& lo, const LtiSystem& sys, const LearnerOptions& opts) {
    std::vector<Check> out;
    Check stab{"learned models stable and certified", true, ""};
    Check bound{"J <= tr(W) on SDP routes", true, ""};
    for (const char* route : {"thm1", "thm2"}) {
        auto it = lo.reports.find(route);
        if (it == lo.reports.end()) continue;
        const LearnReport& r = it->second;
        const bool ok = r.optimal() && r.spectral_abscissa < 0.0 && r.residuals.all_satisfied();
        stab.pass = stab.pass && ok;
        stab.detail += std::string(route) + ": abscissa " + num(r.spectral_abscissa) +
                       (r.residuals.all_satisfied() ? ", residuals ok; " : ", residuals violated; ");
        const bool b = r.optimal() && r.achieved_J <= r.trace_W * (1 + 1e-6) + 1e-9;
        bound.pass = bound.pass && b;
        bound.detail += std::string(route) + ": J " + num(r.achieved_J) + " tr(W) " + num(r.trace_W) + "; ";
    }
    out.push_back(stab);
    out.push_back(bound);

    // Least squares on each route's own data layout.
    Check ls{"least squares attains the smallest cost", true, ""};
    for (const auto& [route, lifted] : {std::pair<const char*, bool>{"thm1", true}, {"thm2", false}}) {
        auto it = lo.reports.find(route);
        if (it == lo.reports.end() || !it->second.optimal()) continue;
        const DataMatrix dm = build_data_matrix(lo.samples, sys, lifted);
        const double j_ls = learn_least_squares(sys, dm, opts).achieved_J;
        const bool ok = j_ls <= it->second.achieved_J + 1e-8 * (1 + j_ls);
        ls.pass = ls.pass && ok;
        ls.detail += std::string(route) + ": J_LS " + num(j_ls) + " vs " + num(it->second.achieved_J) + "; ";
    }
    out.push_back(ls);
    return out;
}

Check filter_check(const FilterDesign& fd) {
    const auto& a = fd.aug;
    const Matrix I = Matrix::Identity(a.n_a, a.n_a);
    auto rel = [](const Matrix& x, const Matrix& ref) { return (x - ref).norm() / std::max(1.0, ref.norm()); };
    const Matrix M = I + fd.E * a.C_a;
    const double id = std::max({rel(fd.M, M), rel(fd.N, M * a.A_a - fd.K * a.C_a), rel(fd.G, M * a.B_ua),
                                rel(fd.L, fd.K * (Matrix::Identity(a.C_a.rows(), a.C_a.rows()) + a.C_a * fd.E) -
                                              M * a.A_a * fd.E)});
    Check c{"filter certificate", false, ""};
    c.pass = fd.spectral_abscissa_N < 0.0 && fd.norms.hinf_value < fd.lambda_star * (1 + 1e-4) &&
             fd.norms.h2_value < fd.gamma_star * (1 + 1e-4) && id <= 1e-10;
    c.detail = "abscissa(N) " + num(fd.spectral_abscissa_N) + ", hinf " + num(fd.norms.hinf_value) + " < lambda* " +
               num(fd.lambda_star) + ", h2 " + num(fd.norms.h2_value) + " < gamma* " + num(fd.gamma_star) +
               ", identity error " + num(id);
    return c;
}

std::vector<Check> table_checks(const Evaluation& ev, const std::map<std::string, LearnReport>& reports,
                                const ScenarioConfig& cfg) {
    std::vector<Check> out;
    const EvaluationRow* base = ev.find("no-model");
    Check gain{"SDP-route models halve the bare-model RMSE on every output", true, ""};
    for (const char* route : {"thm1", "thm2"}) {
        const EvaluationRow* r = ev.find(route);
        if (!r) {
            gain.pass = false;
            gain.detail += std::string(route) + " missing; ";
            continue;
        }
        const Vector& e = r->result.rmse;
        const bool ok = reports.at(route).spectral_abscissa < 0.0 && !r->result.divergent &&
                        (e.array() <= 0.5 * base->result.rmse.array()).all();
        gain.pass = gain.pass && ok;
        gain.detail += std::string(route) + " " + num(e(0));
        for (Eigen::Index k = 1; k < e.size(); ++k) gain.detail += "/" + num(e(k));
        gain.detail += "; ";
    }
    gain.detail += "no-model " + num(base->result.rmse(0));
    for (Eigen::Index k = 1; k < base->result.rmse.size(); ++k) gain.detail += "/" + num(base->result.rmse(k));
    out.push_back(gain);

    if (cfg.reference_rmse.empty()) return out;
    Check ref{"learned-model RMSE within a factor of 5 of the reference", true, ""};
    for (const auto& [model, values] : cfg.reference_rmse) {
        if (model == "no-model") continue;
        const EvaluationRow* r = ev.find(model);
        if (!r || static_cast<Eigen::Index>(values.size()) != r->result.rmse.size()) {
            ref.pass = false;
            ref.detail += model + " missing or wrong width; ";
            continue;
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double e = r->result.rmse(static_cast<Eigen::Index>(k));
            const bool ok = e <= 5 * values[k] && e >= values[k] / 5;
            ref.pass = ref.pass && ok;
            ref.detail += model + " y" + std::to_string(k + 1) + " " + num(e) + " vs " + num(values[k]) + "; ";
        }
    }
    out.push_back(ref);
    return out;
}

}  // namespace

ReproduceResult run_reproduce(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    ReproduceResult res;
    res.filter = run_design_filter(ctx);
    res.learn = run_learn(ctx, res.filter, kRoutes);
    std::map<std::string, UncertaintyModel> models;
    for (const auto& [route, rep] : res.learn.reports) models.emplace(route, rep.model);
    res.evaluation = run_evaluate(ctx, models);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    res.checks.push_back(filter_check(res.filter));
    for (auto& c : learner_checks(res.learn, ctx.plant.system, ctx.cfg.learner)) res.checks.push_back(std::move(c));
    for (auto& c : table_checks(res.evaluation, res.learn.reports, ctx.cfg)) res.checks.push_back(std::move(c));
    res.checks.push_back({"end-to-end runtime under 5 minutes", elapsed < 300.0, num(elapsed) + " s"});

    // Same scenario with half the step; no files.
    {
        ScenarioConfig half = ctx.cfg;
        half.sim.dt *= 0.5;
        half.dump_conic = false;
        half.learner.on_problem = nullptr;
        const Context hc(half, ctx.plant, "");
        const LearnOutput lo = run_learn(hc, res.filter, kRoutes);
        std::map<std::string, UncertaintyModel> hm;
        for (const auto& [route, rep] : lo.reports) hm.emplace(route, rep.model);
        const Evaluation he = run_evaluate(hc, hm);
        double worst = 0.0;
        for (const auto& row : res.evaluation.rows) {
            const EvaluationRow* other = he.find(row.model);
            if (!other) continue;
            for (Eigen::Index k = 0; k < row.result.rmse.size(); ++k) {
                const double a = row.result.rmse(k), b = other->result.rmse(k);
                if (std::isfinite(a) && std::isfinite(b)) {
                    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
                } else if (std::isfinite(a) != std::isfinite(b)) {
                    worst = std::numeric_limits<double>::infinity();
                }
            }
        }
        res.checks.push_back({"RMSE unchanged when dt is halved", worst < 1e-4, "max relative change " + num(worst)});
    }

    if (writes(ctx)) {
        Json checks = Json::array();
        for (const auto& c : res.checks) checks.push_back({{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        io::write_json(ctx.path("summary.json"), {{"seed", ctx.cfg.seed}, {"all_pass", res.all_pass()}, {"checks", checks}});
    }
    return res;
}

}  // namespace greybox::pipeline
