#pragma once

// JSON ingestion of lattice configs and serialization of reports.

#include <json.hpp>

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "anomaly.hpp"

namespace slabfano {

using json = nlohmann::ordered_json;

// Optional defaults a config file may carry for the search commands.
struct SearchHints {
    std::optional<std::array<double, 2>> kappa_range;
    std::optional<std::array<double, 2>> omega_range;
    std::optional<std::array<double, 2>> tune_interval;
};

struct ConfigFile {
    LatticeConfig lattice;
    SearchHints search;
};

namespace detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline const json& need(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + std::string(key) + "'");
    return j.at(key);
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return v.get<int>();
}

inline std::array<double, 2> interval(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
    std::array<double, 2> r{number(v[0], where + "[0]"), number(v[1], where + "[1]")};
    if (!(r[0] < r[1])) throw ConfigError(where + ": lo must be below hi");
    return r;
}

} // namespace detail

inline ConfigFile parse_config(const json& j) {
    using namespace detail;
    only_keys(j, "config", {"period", "defects", "pendants", "tunable", "search"});
    ConfigFile out;
    auto& c = out.lattice;
    c.period = integer(need(j, "config", "period"), "period");
    const json& defs = need(j, "config", "defects");
    if (!defs.is_array()) throw ConfigError("defects: expected an array");
    for (std::size_t i = 0; i < defs.size(); ++i) {
        const std::string w = "defects[" + std::to_string(i) + "]";
        only_keys(defs[i], w, {"x", "z", "d"});
        c.defects.push_back({integer(need(defs[i], w, "x"), w + ".x"), integer(need(defs[i], w, "z"), w + ".z"),
                             number(need(defs[i], w, "d"), w + ".d")});
    }
    if (j.contains("pendants")) {
        const json& pds = j.at("pendants");
        if (!pds.is_array()) throw ConfigError("pendants: expected an array");
        for (std::size_t k = 0; k < pds.size(); ++k) {
            const std::string w = "pendants[" + std::to_string(k) + "]";
            only_keys(pds[k], w, {"host", "mu", "g"});
            const int host = integer(need(pds[k], w, "host"), w + ".host");
            if (host < 0) throw ConfigError(w + ".host must be nonnegative");
            c.pendants.push_back({static_cast<std::size_t>(host), number(need(pds[k], w, "mu"), w + ".mu"),
                                  number(need(pds[k], w, "g"), w + ".g")});
        }
    }
    if (j.contains("tunable")) {
        only_keys(j.at("tunable"), "tunable", {"path"});
        const json& p = need(j.at("tunable"), "tunable", "path");
        if (!p.is_string()) throw ConfigError("tunable.path: expected a string");
        c.tunable = parse_tunable_path(p.get<std::string>());
    }
    if (j.contains("search")) {
        const json& s = j.at("search");
        only_keys(s, "search", {"kappa_range", "omega_range", "tune_interval"});
        if (s.contains("kappa_range")) out.search.kappa_range = interval(s.at("kappa_range"), "search.kappa_range");
        if (s.contains("omega_range")) out.search.omega_range = interval(s.at("omega_range"), "search.omega_range");
        if (s.contains("tune_interval")) out.search.tune_interval = interval(s.at("tune_interval"), "search.tune_interval");
    }
    c.validate();
    return out;
}

inline ConfigFile parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline json to_json(const LatticeConfig& c) {
    json j;
    j["period"] = c.period;
    j["defects"] = json::array();
    for (const auto& d : c.defects) j["defects"].push_back({{"x", d.x}, {"z", d.z}, {"d", d.d}});
    j["pendants"] = json::array();
    for (const auto& p : c.pendants) j["pendants"].push_back({{"host", p.host}, {"mu", p.mu}, {"g", p.g}});
    if (c.tunable) j["tunable"] = {{"path", c.tunable->path}};
    return j;
}

inline json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json complex_json(cplx z, double err) { return {{"re", z.real()}, {"im", z.imag()}, {"err", err}}; }

inline json mode_json(const GuidedMode& m, const ModeReport& r) {
    return {{"kappa0", m.kappa0},
            {"omega0", m.omega0},
            {"residuals", {{"ell", r.ell_residual}, {"im_omega", r.im_omega}, {"radiating", r.radiating_component}}},
            {"decay_fit", {{"measured", r.decay_measured}, {"expected", r.decay_expected}, {"relative_error", r.decay_relative_error}}},
            {"verified", r.verified()},
            {"failing", r.failing}};
}

inline json coefficients_json(const ExpansionCoefficients& c) {
    const auto& e = c.err;
    json j;
    j["case"] = c.case_id;
    j["case_ambiguous"] = c.ambiguous;
    j["kappa0"] = c.kappa0;
    j["omega0"] = c.omega0;
    j["sample_radius"] = c.rho;
    j["l1"] = complex_json(c.l1, e.l1);
    j["l2"] = complex_json(c.l2, e.l2);
    j["l3"] = complex_json(c.l3, e.l3);
    j["r1"] = complex_json(c.r1, e.r1);
    j["r2"] = complex_json(c.r2, e.r2);
    j["t1"] = complex_json(c.t1, e.t1);
    j["t2"] = complex_json(c.t2, e.t2);
    j["r0"] = {{"value", c.r0}, {"direct", c.r0_direct}, {"err", e.r0}};
    j["t0"] = {{"value", c.t0}, {"err", e.t0}};
    if (c.case_id == 1) {
        j["eta1"] = complex_json(c.eta1, e.eta1);
        j["eta2"] = complex_json(c.eta2, e.eta2);
    } else {
        j["eta"] = {{"value", c.eta}, {"err", e.eta}};
    }
    j["theta"] = {c.theta1, c.theta2, c.theta3};
    return j;
}

inline json relations_json(const RelationsReport& r) {
    json j = {{"case", r.case_id}, {"all_passed", r.all_passed()}, {"checks", json::array()}};
    for (const auto& c : r.checks)
        j["checks"].push_back({{"name", c.name}, {"residual", c.residual}, {"error", c.error}, {"ratio", c.ratio()}, {"passed", c.passed()}});
    return j;
}

inline json fano_json(const FanoReport& f) {
    json j = {{"kappa_tilde", f.kappa_tilde},
              {"conditions",
               {{{"name", "real r2, t2"}, {"residual", f.residuals[0]}, {"met", f.met[0]}},
                {{"name", "flat background (eta = 0)"}, {"residual", f.residuals[1]}, {"met", f.met[1]}},
                {{"name", "r0^2 r2 + t0^2 t2 = 0"}, {"residual", f.residuals[2]}, {"met", f.met[2]}}}},
              {"reduced", f.reduced()}};
    if (f.reduced()) {
        j["Gamma"] = *f.Gamma;
        j["q"] = *f.q;
    }
    return j;
}

} // namespace slabfano
