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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "greybox/pipeline.hpp"

using namespace greybox;
namespace pl = greybox::pipeline;
namespace fs = std::filesystem;
using io::Json;

#ifndef GREYBOX_CONFIG_DIR
#define GREYBOX_CONFIG_DIR "configs"
#endif

namespace {

const std::string kScenario = std::string(GREYBOX_CONFIG_DIR) + "/two_mass_scenario.json";

std::string fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("greybox_test_" + name);
    fs::remove_all(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Scalar plant x' = -x + u + eta, y = x + nu with eta = -0.5 x, short horizons.
pl::Context scalar_context(const std::string& out, const Json& overrides = Json::object()) {
    const std::string dir = fresh_dir("scalar_cfg");
    fs::create_directories(dir);
    const Json plant = {{"A", {{-1.0}}}, {"B_u", {{1.0}}}, {"S_eta", {{1.0}}}, {"B_omega", {Json::array()}},
                        {"C", {{1.0}}},  {"D_nu", {{1.0}}},
                        {"true_uncertainty", {{"Theta_a", {{-0.5}}}, {"B_a", {{0.0}}}}}};
    io::write_json(dir + "/plant.json", plant);
    Json s = {{"version", 1},
              {"plant", "plant.json"},
              {"filter", {{"r", 1}, {"epsilon", 1e-3}, {"gamma_max", 10.0}}},
              {"signals",
               {{"u_train", {{"kind", "random_multisine"}, {"count", 4}, {"w_lo", 0.2}, {"w_hi", 3.0}, {"amplitude", 1.0}}},
                {"u_test", {{"kind", "random_multisine"}, {"count", 4}, {"w_lo", 0.2}, {"w_hi", 3.0}, {"amplitude", 1.0}, {"seed_offset", 2}}},
                {"nu", {{"kind", "random_multisine"}, {"count", 3}, {"w_lo", 50.0}, {"w_hi", 100.0}, {"amplitude", 1e-4}, {"seed_offset", 1}}}}},
              {"simulation", {{"T_train", 10.0}, {"T_test", 5.0}, {"dt", 1e-3}}},
              {"dataset", {{"rate_hz", 50.0}, {"t_min", 1.0}}},
              {"learner", {{"include_input_gain", false}}},
              {"seed", 4}};
    s.merge_patch(overrides);
    io::write_json(dir + "/scenario.json", s);
    return pl::make_context(dir + "/scenario.json", out, std::nullopt);
}

}  // namespace

TEST_CASE("shipped scenario parses") {
    const pl::ScenarioConfig c = pl::load_scenario(kScenario);
    CHECK(c.version == pl::kScenarioVersion);
    CHECK(c.r == 2);
    CHECK(c.epsilon == doctest::Approx(1e-3));
    REQUIRE(c.gamma_max.has_value());
    CHECK(c.x0.size() == 4);
    CHECK(c.routes.size() == 3);
    CHECK(fs::exists(c.plant_path));
    CHECK_FALSE(c.learner.include_input_gain);
    // serialization keeps every setting
    const pl::ScenarioConfig again = pl::scenario_from_json(pl::to_json(c));
    CHECK(pl::to_json(again) == pl::to_json(c));
}

TEST_CASE("scenario validation") {
    const Json base = {{"version", 1}, {"plant", "p.json"}};
    CHECK_NOTHROW(pl::scenario_from_json(base));
    auto rejects = [&](const Json& patch) {
        Json j = base;
        j.merge_patch(patch);
        CHECK_THROWS_AS(pl::scenario_from_json(j), Error);
    };
    rejects({{"version", 2}});
    rejects({{"plnt", "x"}});
    rejects({{"filter", {{"epsilon", -1.0}}}});
    rejects({{"filter", {{"r", 0}}}});
    rejects({{"dataset", {{"t_min", 100.0}}}});
    rejects({{"learner", {{"routes", {"thm3"}}}}});
    rejects({{"seed", -1}});
    CHECK_THROWS_AS(pl::scenario_from_json(Json{{"plant", "p.json"}}), Error);
    CHECK(pl::parse_routes("all").size() == 3);
    CHECK(pl::parse_routes("thm2") == std::vector<std::string>{"thm2"});
    CHECK_THROWS_AS(pl::parse_routes("bogus"), Error);
}

TEST_CASE("signal specs resolve from the seed") {
    const Json spec = {{"kind", "random_multisine"}, {"count", 3}, {"w_lo", 1.0}, {"w_hi", 2.0}, {"amplitude", 0.5},
                       {"seed_offset", 1}};
    const Signal a = pl::resolve_signal(spec, 2, 10, 5.0, "u");
    const Signal b = pl::resolve_signal(spec, 2, 10, 5.0, "u");
    const Signal c = pl::resolve_signal(spec, 2, 11, 5.0, "u");
    CHECK(a.value(0.7) == b.value(0.7));
    CHECK(a.value(0.7) != c.value(0.7));
    CHECK(a.value(0.7) == Signal::random_multisine(2, 3, 1.0, 2.0, 0.5, 11).value(0.7));

    const Signal f = pl::resolve_signal({{"kind", "random_filtered"}, {"amplitude", 0.2}}, 1, 3, 8.0, "u");
    CHECK(f.kind() == SignalKind::FilteredRandom);
    CHECK(f.horizon() == 8.0);

    const Json explicit_spec = io::to_json(Signal::constant(Vector::Ones(2)));
    CHECK(pl::resolve_signal(explicit_spec, 2, 0, 1.0, "u").value(3.0) == Vector::Ones(2));
    CHECK_THROWS_AS(pl::resolve_signal(explicit_spec, 1, 0, 1.0, "u"), Error);
    CHECK_THROWS_AS(pl::resolve_signal({{"kind", "random_multisine"}, {"bogus", 1}}, 1, 0, 1.0, "u"), Error);
    CHECK_THROWS_AS(pl::resolve_signal(Json::object(), 1, 0, 1.0, "u"), Error);
}

TEST_CASE("zero scenario gives an all-zero trajectory") {
    const std::string out = fresh_dir("zero");
    const pl::Context ctx = scalar_context(out, {{"signals", nullptr}});
    const Trajectory tr = pl::run_simulate(ctx);
    CHECK(tr.channel("x").isZero());
    CHECK(tr.channel("y").isZero());
    std::ifstream is(ctx.path("train_trajectory.csv"));
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,x_1,y_1,u_1,eta_1");
    std::getline(is, line);
    CHECK(line == "0,0,0,0,0");
    CHECK(fs::exists(ctx.path("simulate_meta.json")));
    fs::remove_all(out);
}

TEST_CASE("scalar pipeline end to end") {
    const std::string out = fresh_dir("scalar");
    const pl::Context ctx = scalar_context(out);
    const FilterDesign fd = pl::run_design_filter(ctx);
    CHECK(fd.certified());
    const pl::LearnOutput lo = pl::run_learn(ctx, pl::load_or_design_filter(ctx), {"thm1", "thm2", "ls"});
    CHECK(lo.samples.size() == 450);  // [1, 10) at 50 Hz
    for (const char* route : {"thm1", "thm2", "ls"}) {
        CAPTURE(route);
        REQUIRE(lo.reports.count(route));
        const LearnReport& r = lo.reports.at(route);
        CHECK(r.optimal());
        CHECK(fs::exists(ctx.path(std::string("learn_") + route + ".json")));
        // the hidden gain is -0.5 and the data are nearly clean
        CHECK(r.model.Theta_l(0, 0) == doctest::Approx(-0.5).epsilon(0.05));
    }
    std::ifstream is(ctx.path("filter_trajectory.csv"));
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,z_1,z_2,etahat_1,xhat_1");
    is.close();

    const pl::Evaluation ev = pl::run_evaluate(ctx, pl::load_models(ctx, {"thm1", "thm2", "ls"}));
    REQUIRE(ev.rows.size() == 4);
    CHECK(ev.rows.front().model == "no-model");
    for (const auto& row : ev.rows) CHECK_FALSE(row.result.divergent);
    CHECK(ev.find("thm1")->result.rmse(0) < ev.find("no-model")->result.rmse(0));
    CHECK(slurp(ctx.path("plot_y1.csv")).rfind("t,y_true,y_no-model,y_thm1,y_thm2,y_ls\n", 0) == 0);
    const Json table = io::read_json(ctx.path("rmse.json"));
    CHECK(table["rows"].size() == 4);

    // a model equal to the truth has zero error
    const UncertaintyModel truth{ctx.plant.truth->Theta_a, ctx.plant.truth->B_a, ctx.plant.system.S_eta(), Matrix(),
                                 Provenance::LeastSquares};
    const pl::Context quiet(ctx.cfg, ctx.plant, "");
    const pl::Evaluation exact = pl::run_evaluate(quiet, {{"ls", truth}});
    CHECK(exact.find("ls")->result.rmse.norm() <= 1e-14);
    fs::remove_all(out);
}

TEST_CASE("reruns are byte-identical") {
    const std::string a = fresh_dir("det_a"), b = fresh_dir("det_b");
    for (const auto& out : {a, b}) {
        const pl::Context ctx = scalar_context(out);
        pl::run_learn(ctx, pl::run_design_filter(ctx), {"thm1", "ls"});
    }
    for (const char* f : {"filter_design.json", "dataset.csv", "filter_trajectory.csv", "learn_thm1.json", "learn_ls.json"}) {
        CAPTURE(f);
        CHECK(slurp(a + "/" + f) == slurp(b + "/" + f));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("conic dumps are written on request") {
    const std::string out = fresh_dir("dump");
    const pl::Context ctx = scalar_context(out, {{"dump_conic", true}});
    pl::run_learn(ctx, pl::run_design_filter(ctx), {"thm1"});
    CHECK(fs::exists(ctx.path("conic_thm1.txt")));
    bool filter_dump = false;
    for (const auto& e : fs::directory_iterator(out)) {
        filter_dump = filter_dump || e.path().filename().string().rfind("conic_filter", 0) == 0;
    }
    CHECK(filter_dump);
    fs::remove_all(out);
}

TEST_CASE("infeasible filter settings are reported") {
    const pl::Context ctx = scalar_context("", {{"filter", {{"epsilon", 1e3}}}});
    try {
        pl::run_design_filter(ctx);
        FAIL("expected an infeasible design");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
    }
}

TEST_CASE("missing inputs are configuration errors") {
    CHECK_THROWS_AS(pl::make_context("/nonexistent/scenario.json", "", std::nullopt), Error);
    const pl::Context ctx = scalar_context(fresh_dir("missing"));
    try {
        pl::load_models(ctx, {"thm1"});
        FAIL("expected a missing-file error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("shipped benchmark reproduces") {
    const std::string out = fresh_dir("reproduce");
    const pl::Context ctx = pl::make_context(kScenario, out, std::nullopt);
    const pl::ReproduceResult res = pl::run_reproduce(ctx);
    for (const auto& c : res.checks) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.pass);
    }
    CHECK(res.evaluation.find("ls")->result.divergent);
    for (const char* f : {"filter_design.json", "rmse.csv", "plot_y1.csv", "plot_y2.csv", "summary.json"}) {
        CHECK(fs::exists(ctx.path(f)));
    }
    fs::remove_all(out);
}
