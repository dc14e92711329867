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

// Python bindings for the core library.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "greybox/analysis.hpp"
#include "greybox/dataset.hpp"
#include "greybox/estimator.hpp"
#include "greybox/learner.hpp"
#include "greybox/model.hpp"
#include "greybox/pipeline.hpp"

namespace py = pybind11;
using namespace greybox;
namespace pl = greybox::pipeline;

namespace {

// Rows of x_hat, u and eta_hat are the samples.
std::vector<Sample> samples_from_arrays(const Matrix& x_hat, const Matrix& u, const Matrix& eta_hat) {
    if (x_hat.rows() != u.rows() || x_hat.rows() != eta_hat.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "x_hat, u and eta_hat must have the same number of rows");
    }
    std::vector<Sample> out(static_cast<std::size_t>(x_hat.rows()));
    for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
        out[i] = {x_hat.row(i).transpose(), u.row(i).transpose(), eta_hat.row(i).transpose(), static_cast<double>(i)};
    }
    return out;
}

py::dict checks_to_dict(const std::vector<pl::Check>& checks) {
    py::dict d;
    for (const auto& c : checks) d[py::str(c.name)] = py::make_tuple(c.pass, c.detail);
    return d;
}

py::dict rmse_to_dict(const pl::Evaluation& ev) {
    py::dict d;
    for (const auto& row : ev.rows) {
        py::dict r;
        r["rmse"] = Vector(row.result.rmse);
        r["divergent"] = row.result.divergent;
        r["spectral_abscissa"] = row.result.spectral_abscissa;
        d[py::str(row.model)] = r;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Certified learning of linear uncertainty models for partially known LTI plants";

    static py::exception<Error> base(m, "GreyboxError");
    static py::exception<Error> infeasible(m, "InfeasibleError", base.ptr());
    static py::exception<Error> numerical(m, "NumericalError", base.ptr());
    static py::exception<Error> shape(m, "DimensionError", base.ptr());
    static py::exception<Error> config(m, "ConfigError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::Infeasible: py::set_error(infeasible, e.what()); break;
                case ErrorKind::NumericalFailure: py::set_error(numerical, e.what()); break;
                case ErrorKind::DimensionMismatch: py::set_error(shape, e.what()); break;
                case ErrorKind::InvalidArgument:
                case ErrorKind::Io: py::set_error(config, e.what()); break;
            }
        }
    });

    py::class_<LtiSystem>(m, "LtiSystem")
        .def(py::init<Matrix, Matrix, Matrix, Matrix, Matrix, Matrix>(), py::arg("A"), py::arg("B_u"),
             py::arg("S_eta"), py::arg("B_omega"), py::arg("C"), py::arg("D_nu"))
        .def_property_readonly("A", &LtiSystem::A)
        .def_property_readonly("B_u", &LtiSystem::B_u)
        .def_property_readonly("S_eta", &LtiSystem::S_eta)
        .def_property_readonly("B_omega", &LtiSystem::B_omega)
        .def_property_readonly("C", &LtiSystem::C)
        .def_property_readonly("D_nu", &LtiSystem::D_nu);

    py::class_<AugmentedSystem>(m, "AugmentedSystem")
        .def_readonly("A_a", &AugmentedSystem::A_a)
        .def_readonly("B_ua", &AugmentedSystem::B_ua)
        .def_readonly("B_omega_a", &AugmentedSystem::B_omega_a)
        .def_readonly("C_a", &AugmentedSystem::C_a)
        .def_readonly("C_bar_a", &AugmentedSystem::C_bar_a)
        .def_readonly("r", &AugmentedSystem::r)
        .def_readonly("n_a", &AugmentedSystem::n_a);
    m.def("augment", &augment, py::arg("system"), py::arg("r"));

    py::enum_<Provenance>(m, "Provenance")
        .value("COST_MODIFIED", Provenance::CostModified)
        .value("CONSTRAINT_MODIFIED", Provenance::ConstraintModified)
        .value("LEAST_SQUARES", Provenance::LeastSquares);

    py::class_<UncertaintyModel>(m, "UncertaintyModel")
        .def_readonly("Theta_l", &UncertaintyModel::Theta_l)
        .def_readonly("B_l", &UncertaintyModel::B_l)
        .def_readonly("S_eta_l", &UncertaintyModel::S_eta_l)
        .def_readonly("certificate", &UncertaintyModel::certificate)
        .def_readonly("provenance", &UncertaintyModel::provenance);
    m.def("extended_model", &extended_model, py::arg("system"), py::arg("model"));

    py::class_<DataMatrix>(m, "DataMatrix")
        .def_readonly("D", &DataMatrix::D)
        .def_readonly("D_factor", &DataMatrix::D_factor)
        .def_readonly("sample_count", &DataMatrix::sample_count)
        .def_readonly("lifted", &DataMatrix::lifted);
    m.def(
        "build_data_matrix",
        [](const Matrix& x_hat, const Matrix& u, const Matrix& eta_hat, const Matrix& lift_map) {
            return build_data_matrix(samples_from_arrays(x_hat, u, eta_hat), lift_map);
        },
        py::arg("x_hat"), py::arg("u"), py::arg("eta_hat"), py::arg("lift_map") = Matrix(),
        "Data matrix from row-stacked samples; a non-empty lift_map replaces eta_hat by lift_map @ eta_hat.");
    m.def("cost_J", &cost_J, py::arg("data"), py::arg("Theta_l"), py::arg("B_l"));

    py::class_<LearnerOptions>(m, "LearnerOptions")
        .def(py::init<>())
        .def_readwrite("include_input_gain", &LearnerOptions::include_input_gain)
        .def_readwrite("certificate_bound", &LearnerOptions::certificate_bound)
        .def_readwrite("gamma_grid", &LearnerOptions::gamma_grid);

    py::class_<LearnReport>(m, "LearnReport")
        .def_readonly("model", &LearnReport::model)
        .def_readonly("W", &LearnReport::W)
        .def_readonly("trace_W", &LearnReport::trace_W)
        .def_readonly("achieved_J", &LearnReport::achieved_J)
        .def_readonly("gamma_bar", &LearnReport::gamma_bar)
        .def_readonly("message", &LearnReport::message)
        .def_readonly("spectral_abscissa", &LearnReport::spectral_abscissa)
        .def_property_readonly("optimal", &LearnReport::optimal)
        .def_property_readonly("status", [](const LearnReport& r) { return sdp::to_string(r.status); })
        .def_property_readonly("certified", [](const LearnReport& r) { return r.residuals.all_satisfied(); });
    m.def("learn_cost_modified", &learn_cost_modified, py::arg("system"), py::arg("data"),
          py::arg("options") = LearnerOptions{});
    m.def("learn_constraint_modified", &learn_constraint_modified, py::arg("system"), py::arg("data"),
          py::arg("options") = LearnerOptions{});
    m.def("learn_least_squares", &learn_least_squares, py::arg("system"), py::arg("data"),
          py::arg("options") = LearnerOptions{});

    py::class_<FilterDesign>(m, "FilterDesign")
        .def_readonly("aug", &FilterDesign::aug)
        .def_readonly("E", &FilterDesign::E)
        .def_readonly("K", &FilterDesign::K)
        .def_readonly("M", &FilterDesign::M)
        .def_readonly("N", &FilterDesign::N)
        .def_readonly("G", &FilterDesign::G)
        .def_readonly("L", &FilterDesign::L)
        .def_readonly("B_nu_a", &FilterDesign::B_nu_a)
        .def_readonly("lambda_star", &FilterDesign::lambda_star)
        .def_readonly("gamma_star", &FilterDesign::gamma_star)
        .def_readonly("spectral_abscissa_N", &FilterDesign::spectral_abscissa_N)
        .def_property_readonly("hinf", [](const FilterDesign& f) { return f.norms.hinf_value; })
        .def_property_readonly("h2", [](const FilterDesign& f) { return f.norms.h2_value; })
        .def_property_readonly("certified", [](const FilterDesign& f) { return f.certified(); });
    m.def(
        "design_filter",
        [](const AugmentedSystem& aug, double epsilon, double gamma_max) { return design_filter(aug, epsilon, gamma_max); },
        py::arg("aug"), py::arg("epsilon"), py::arg("gamma_max"));
    m.def("is_detectable", &is_detectable, py::arg("A"), py::arg("C"), py::arg("tol") = 1e-9);

    m.def("spectral_abscissa", &spectral_abscissa, py::arg("A"));
    m.def(
        "hinf_norm", [](const Matrix& A, const Matrix& B, const Matrix& C) { return hinf_norm(A, B, C).value; },
        py::arg("A"), py::arg("B"), py::arg("C"));
    m.def("h2_norm", &h2_norm, py::arg("A"), py::arg("B"), py::arg("C"));

    m.def(
        "reproduce",
        [](const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed) {
            const pl::Context ctx = pl::make_context(config, out_dir, seed);
            const pl::ReproduceResult res = [&] {
                py::gil_scoped_release release;
                return pl::run_reproduce(ctx);
            }();
            py::dict d;
            d["all_pass"] = res.all_pass();
            d["checks"] = checks_to_dict(res.checks);
            d["rmse"] = rmse_to_dict(res.evaluation);
            d["lambda_star"] = res.filter.lambda_star;
            d["gamma_star"] = res.filter.gamma_star;
            return d;
        },
        py::arg("config"), py::arg("out_dir") = "", py::arg("seed") = py::none(),
        "Runs the full pipeline for a scenario file; an empty out_dir writes no files.");
}
