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

// Command-line front end. Exit codes: 0 success, 1 numerical or solver
// failure, 2 configuration or I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "greybox/pipeline.hpp"

using namespace greybox;
namespace pl = greybox::pipeline;

namespace {

constexpr int kOk = 0, kNumerical = 1, kConfig = 2;

#ifndef GREYBOX_DEFAULT_SCENARIO
#define GREYBOX_DEFAULT_SCENARIO "configs/two_mass_scenario.json"
#endif

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string route;
};

void add_common(CLI::App* cmd, Common& c, bool with_route, bool config_required = true) {
    auto* opt = cmd->add_option("--config", c.config, "scenario JSON");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "overrides the scenario seed");
    if (with_route) {
        cmd->add_option("--route", c.route, "learner route")->check(CLI::IsMember({"thm1", "thm2", "ls", "all"}));
    }
}

std::vector<std::string> routes_for(const pl::Context& ctx, const Common& c) {
    return c.route.empty() ? ctx.cfg.routes : pl::parse_routes(c.route);
}

void print_rmse(const pl::Evaluation& ev) {
    std::printf("%-10s", "model");
    const int m = ev.rows.empty() ? 0 : static_cast<int>(ev.rows.front().result.rmse.size());
    for (int k = 0; k < m; ++k) std::printf("  %12s", ("rmse_y" + std::to_string(k + 1)).c_str());
    std::printf("  %s\n", "status");
    for (const auto& r : ev.rows) {
        std::printf("%-10s", r.model.c_str());
        for (int k = 0; k < m; ++k) std::printf("  %12.6g", r.result.rmse(k));
        std::printf("  %s\n", r.result.divergent ? "divergent" : "stable");
    }
}

void print_filter(const FilterDesign& fd) {
    std::printf("filter: r = %d, epsilon = %g, gamma_max = %g\n", fd.aug.r, fd.epsilon, fd.gamma_max);
    std::printf("  lambda* = %.6g  (hinf check %.6g)\n", fd.lambda_star, fd.norms.hinf_value);
    std::printf("  gamma*  = %.6g  (h2 check %.6g)\n", fd.gamma_star, fd.norms.h2_value);
    std::printf("  spectral abscissa of N = %.6g, certified: %s\n", fd.spectral_abscissa_N,
                fd.certified() ? "yes" : "no");
}

int cmd_simulate(const Common& c) {
    const pl::Context ctx = pl::make_context(c.config, c.out, c.seed);
    const Trajectory tr = pl::run_simulate(ctx);
    std::printf("simulated %d steps over %g s -> %s\n", tr.size() - 1, ctx.cfg.T_train,
                ctx.path("train_trajectory.csv").c_str());
    return kOk;
}

int cmd_design_filter(const Common& c) {
    const pl::Context ctx = pl::make_context(c.config, c.out, c.seed);
    const FilterDesign fd = pl::run_design_filter(ctx);
    print_filter(fd);
    if (!fd.certified()) {
        std::fprintf(stderr, "error: the design failed independent verification\n");
        return kNumerical;
    }
    return kOk;
}

int cmd_learn(const Common& c) {
    const pl::Context ctx = pl::make_context(c.config, c.out, c.seed);
    const FilterDesign fd = pl::load_or_design_filter(ctx);
    const pl::LearnOutput lo = pl::run_learn(ctx, fd, routes_for(ctx, c));
    std::printf("dataset: %zu samples\n", lo.samples.size());
    int rc = kOk;
    for (const auto& [route, rep] : lo.reports) {
        std::printf("%-5s status %-18s J = %-12.6g tr(W) = %-12.6g abscissa = %.6g\n", route.c_str(),
                    sdp::to_string(rep.status).c_str(), rep.achieved_J, rep.trace_W, rep.spectral_abscissa);
        if (route != "ls" && !rep.optimal()) {
            std::fprintf(stderr, "error: %s: %s\n", route.c_str(), rep.message.c_str());
            rc = kNumerical;
        }
    }
    return rc;
}

int cmd_evaluate(const Common& c) {
    const pl::Context ctx = pl::make_context(c.config, c.out, c.seed);
    const pl::Evaluation ev = pl::run_evaluate(ctx, pl::load_models(ctx, routes_for(ctx, c)));
    print_rmse(ev);
    return kOk;
}

int cmd_reproduce(const Common& c) {
    const std::string config = c.config.empty() ? GREYBOX_DEFAULT_SCENARIO : c.config;
    const pl::Context ctx = pl::make_context(config, c.out, c.seed);
    const pl::ReproduceResult res = pl::run_reproduce(ctx);
    print_filter(res.filter);
    print_rmse(res.evaluation);
    std::printf("\n");
    for (const auto& chk : res.checks) {
        std::printf("[%s] %s: %s\n", chk.pass ? "PASS" : "FAIL", chk.name.c_str(), chk.detail.c_str());
    }
    std::printf("artifacts in %s\n", ctx.out_dir.c_str());
    return res.all_pass() ? kOk : kNumerical;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Infeasible:
        case ErrorKind::NumericalFailure: return kNumerical;
        default: return kConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"greybox: stable grey-box identification of LTI uncertainty"};
    app.require_subcommand(1);
    Common c;
    auto* sim = app.add_subcommand("simulate", "simulate the plant on the training signals");
    auto* des = app.add_subcommand("design-filter", "design the uncertainty and state filter");
    auto* lrn = app.add_subcommand("learn", "estimate the uncertainty and learn models");
    auto* evl = app.add_subcommand("evaluate", "compare learned models on the test input");
    auto* rep = app.add_subcommand("reproduce-paper", "run the full benchmark and check the results");
    add_common(sim, c, false);
    add_common(des, c, false);
    add_common(lrn, c, true);
    add_common(evl, c, true);
    add_common(rep, c, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (des->parsed()) return cmd_design_filter(c);
        if (lrn->parsed()) return cmd_learn(c);
        if (evl->parsed()) return cmd_evaluate(c);
        return cmd_reproduce(c);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: malformed JSON: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumerical;
    }
}
