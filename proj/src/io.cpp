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

#include "greybox/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace greybox::io {

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& why) {
    throw Error(ErrorKind::InvalidArgument, what + ": " + why);
}

// JSON has no inf/nan; they are written as strings.
Json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double number_from(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    bad(what, "expected a number");
}

const Json& at(const Json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) bad(what, std::string("missing key '") + key + "'");
    return j.at(key);
}

}  // namespace

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what, int cols_if_empty) {
    if (!j.is_array()) bad(what, "expected an array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    if (r == 0) return Matrix(0, cols_if_empty);
    if (!j[0].is_array()) bad(what, "expected an array of rows");
    const auto c = static_cast<Eigen::Index>(j[0].size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c) bad(what, "ragged rows");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = number_from(j[i][k], what);
    }
    return m;
}

Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) bad(what, "expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(j[i], what);
    return v;
}

// ---------------------------------------------------------------------------

Json to_json(const PlantDescription& p) {
    const LtiSystem& s = p.system;
    Json j;
    j["A"] = to_json(s.A());
    j["B_u"] = to_json(s.B_u());
    j["S_eta"] = to_json(s.S_eta());
    j["B_omega"] = to_json(s.B_omega());
    j["C"] = to_json(s.C());
    j["D_nu"] = to_json(s.D_nu());
    if (p.truth) {
        j["true_uncertainty"] = {{"Theta_a", to_json(p.truth->Theta_a)}, {"B_a", to_json(p.truth->B_a)}};
    }
    return j;
}

PlantDescription plant_from_json(const Json& j) {
    const std::string w = "plant";
    const Matrix A = matrix_from_json(at(j, "A", w), "plant.A");
    LtiSystem sys(A, matrix_from_json(at(j, "B_u", w), "plant.B_u"), matrix_from_json(at(j, "S_eta", w), "plant.S_eta"),
                  matrix_from_json(at(j, "B_omega", w), "plant.B_omega"), matrix_from_json(at(j, "C", w), "plant.C"),
                  matrix_from_json(at(j, "D_nu", w), "plant.D_nu"));
    PlantDescription p{std::move(sys), std::nullopt};
    if (j.contains("true_uncertainty")) {
        const Json& t = j.at("true_uncertainty");
        const auto& d = p.system.dims();
        TrueUncertainty tu{matrix_from_json(at(t, "Theta_a", "true_uncertainty"), "Theta_a", d.n),
                           t.contains("B_a") ? matrix_from_json(t.at("B_a"), "B_a", d.l)
                                             : Matrix(Matrix::Zero(d.n_eta, d.l))};
        tu.check_against(p.system);
        p.truth = std::move(tu);
    }
    return p;
}

PlantDescription read_plant(const std::string& path) {
    try {
        return plant_from_json(read_json(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), "plant file '" + path + "': " + e.what());
    }
}

void write_plant(const std::string& path, const PlantDescription& p) { write_json(path, to_json(p)); }

Json to_json(const UncertaintyModel& m) {
    return {{"Theta_l", to_json(m.Theta_l)},
            {"B_l", to_json(m.B_l)},
            {"S_eta_l", to_json(m.S_eta_l)},
            {"certificate", to_json(m.certificate)},
            {"provenance", to_string(m.provenance)}};
}

UncertaintyModel uncertainty_model_from_json(const Json& j) {
    const std::string w = "uncertainty model";
    UncertaintyModel m;
    m.S_eta_l = matrix_from_json(at(j, "S_eta_l", w), "S_eta_l");
    m.Theta_l = matrix_from_json(at(j, "Theta_l", w), "Theta_l");
    m.B_l = matrix_from_json(at(j, "B_l", w), "B_l");
    m.certificate = j.contains("certificate") ? matrix_from_json(j.at("certificate"), "certificate") : Matrix();
    m.provenance = provenance_from_string(at(j, "provenance", w).get<std::string>());
    return m;
}

Json to_json(const ResidualReport& r) {
    Json entries = Json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"name", e.name},
                           {"sense", e.negative ? "negative" : "positive"},
                           {"extreme_eigenvalue", number(e.value)},
                           {"norm", number(e.norm)},
                           {"satisfied", e.satisfied}});
    }
    return {{"kind", r.kind}, {"all_satisfied", r.all_satisfied()}, {"entries", entries}};
}

Json to_json(const NormReport& r) {
    return {{"hinf", {{"value", number(r.hinf_value)},
                      {"peak_frequency", number(r.hinf_peak_freq)},
                      {"method", r.hinf_method},
                      {"rel_tol", r.hinf_rel_tol},
                      {"grid_check", number(r.hinf_grid_value)}}},
            {"h2", {{"value", number(r.h2_value)}, {"method", r.h2_method}, {"frequency_check", number(r.h2_frequency_value)}}}};
}

Json to_json(const LearnReport& r) {
    Json j;
    j["model"] = to_json(r.model);
    j["W"] = to_json(r.W);
    j["trace_W"] = number(r.trace_W);
    j["achieved_J"] = number(r.achieved_J);
    j["gamma_bar"] = r.gamma_bar ? Json(*r.gamma_bar) : Json(nullptr);
    j["status"] = sdp::to_string(r.status);
    j["message"] = r.message;
    j["spectral_abscissa"] = number(r.spectral_abscissa);
    j["hurwitz"] = r.spectral_abscissa < 0.0;
    j["certificate_condition"] = number(r.certificate_condition);
    j["rank_deficient"] = r.rank_deficient;
    j["iterations"] = r.iterations;
    if (!r.residuals.kind.empty()) j["residuals"] = to_json(r.residuals);
    if (!r.line_search.empty()) {
        Json ls = Json::array();
        for (const auto& t : r.line_search) {
            ls.push_back({{"gamma_bar", t.gamma_bar}, {"status", sdp::to_string(t.status)}, {"trace_W", number(t.trace_W)}});
        }
        j["line_search"] = ls;
    }
    return j;
}

UncertaintyModel model_from_learn_report(const Json& j) { return uncertainty_model_from_json(at(j, "model", "learn report")); }

Json to_json(const FilterDesign& fd) {
    Json j;
    j["r"] = fd.aug.r;
    j["epsilon"] = fd.epsilon;
    j["gamma_max"] = fd.gamma_max;
    j["lambda_star"] = fd.lambda_star;
    j["gamma_star"] = fd.gamma_star;
    j["iss_gain_bound"] = number(fd.iss_gain_bound);
    for (const auto& [name, m] : {std::pair<const char*, const Matrix*>{"E", &fd.E}, {"K", &fd.K}, {"M", &fd.M},
                                  {"N", &fd.N}, {"G", &fd.G}, {"L", &fd.L}, {"B_nu_a", &fd.B_nu_a},
                                  {"Pi", &fd.Pi}, {"Z", &fd.Z}}) {
        j[name] = to_json(*m);
    }
    j["spectral_abscissa_N"] = number(fd.spectral_abscissa_N);
    j["norms"] = to_json(fd.norms);
    j["residuals"] = to_json(fd.residuals);
    j["certified"] = fd.certified();
    j["solver"] = {{"iterations", fd.iterations}, {"message", fd.message}};
    return j;
}

FilterDesign filter_design_from_json(const Json& j, const LtiSystem& sys) {
    const std::string w = "filter design";
    const AugmentedSystem aug = augment(sys, at(j, "r", w).get<int>());
    FilterDesign fd = assemble_filter(aug, matrix_from_json(at(j, "E", w), "E"), matrix_from_json(at(j, "K", w), "K"),
                                      matrix_from_json(at(j, "Pi", w), "Pi"), matrix_from_json(at(j, "Z", w), "Z"),
                                      at(j, "lambda_star", w).get<double>(), at(j, "gamma_star", w).get<double>(),
                                      at(j, "epsilon", w).get<double>(), at(j, "gamma_max", w).get<double>());
    if (j.contains("solver")) {
        fd.iterations = j["solver"].value("iterations", 0);
        fd.message = j["solver"].value("message", "");
    }
    return fd;
}

// ---------------------------------------------------------------------------

Json to_json(const Signal& s) {
    Json j;
    j["kind"] = to_string(s.kind());
    j["channels"] = s.channels();
    switch (s.kind()) {
        case SignalKind::Zero: break;
        case SignalKind::Constant: j["value"] = to_json(s.offset()); break;
        case SignalKind::Ramp:
            j["offset"] = to_json(s.offset());
            j["slope"] = to_json(s.slope());
            break;
        case SignalKind::Polynomial: j["coeffs"] = to_json(s.coeffs()); break;
        case SignalKind::Multisine: {
            Json comps = Json::array();
            for (const auto& ch : s.sines()) {
                Json c = Json::array();
                for (const auto& sn : ch) c.push_back({{"amplitude", sn.amplitude}, {"frequency", sn.frequency}, {"phase", sn.phase}});
                comps.push_back(c);
            }
            j["components"] = comps;
            j["offset"] = to_json(s.offset());
            break;
        }
        case SignalKind::FilteredRandom:
            j["amplitude"] = s.amplitude();
            j["knot_spacing"] = s.knot_spacing();
            j["horizon"] = s.horizon();
            j["seed"] = s.seed();
            break;
    }
    return j;
}

Signal signal_from_json(const Json& j, const std::string& what) {
    const SignalKind k = signal_kind_from_string(at(j, "kind", what).get<std::string>());
    switch (k) {
        case SignalKind::Zero: return Signal::zero(at(j, "channels", what).get<int>());
        case SignalKind::Constant: return Signal::constant(vector_from_json(at(j, "value", what), what));
        case SignalKind::Ramp:
            return Signal::ramp(vector_from_json(at(j, "offset", what), what), vector_from_json(at(j, "slope", what), what));
        case SignalKind::Polynomial: return Signal::polynomial(matrix_from_json(at(j, "coeffs", what), what));
        case SignalKind::Multisine: {
            std::vector<std::vector<Sine>> comps;
            for (const auto& ch : at(j, "components", what)) {
                std::vector<Sine> c;
                for (const auto& sn : ch) {
                    c.push_back({at(sn, "amplitude", what).get<double>(), at(sn, "frequency", what).get<double>(),
                                 sn.value("phase", 0.0)});
                }
                comps.push_back(std::move(c));
            }
            return Signal::multisine(std::move(comps),
                                     j.contains("offset") ? vector_from_json(j.at("offset"), what) : Vector());
        }
        case SignalKind::FilteredRandom:
            return Signal::filtered_random(at(j, "channels", what).get<int>(), at(j, "amplitude", what).get<double>(),
                                           at(j, "knot_spacing", what).get<double>(), at(j, "horizon", what).get<double>(),
                                           at(j, "seed", what).get<std::uint64_t>());
    }
    bad(what, "unsupported signal");
}

Json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Io, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    os << j.dump(2) << '\n';
    if (!os) throw Error(ErrorKind::Io, "error while writing '" + path + "'");
}

}  // namespace greybox::io
