// Command-line front end: sweeps, mode search, tuning, analysis and validation.

#include <CLI11.hpp>
#include <slabfano/config_io.hpp>
#include <slabfano/slabfano.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace slabfano;

namespace {

constexpr const char* tool_version = "1.0.0";

enum Exit { ok = 0, none_found = 2, numerical_failure = 3, config_error = 4 };

struct NoneFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Options {
    std::string config;
    std::vector<double> kappa;
    std::vector<double> kappa_range;
    std::vector<double> omega_range;
    std::vector<double> interval;
    std::size_t grid = 0;
    std::string out = ".";
    std::uint64_t seed = 0;
    std::vector<std::string> files;
    std::size_t samples = 50;
};

struct Run {
    std::string command;
    Options opt;
    ConfigFile cfg;
    json manifest;

    Run(std::string cmd, const Options& o) : command(std::move(cmd)), opt(o) {
        cfg = load_config(opt.config);
        manifest = {{"tool", "slabfano"}, {"version", tool_version}, {"command", command}, {"config_path", opt.config},
                    {"config", to_json(cfg.lattice)}, {"seed", opt.seed}, {"out", opt.out}};
        fs::create_directories(opt.out);
    }

    std::array<double, 2> range(const std::vector<double>& given, const std::optional<std::array<double, 2>>& hint, const char* what) const {
        if (given.size() == 2) {
            if (!(given[0] < given[1])) throw ConfigError(std::string(what) + ": lo must be below hi");
            return {given[0], given[1]};
        }
        if (hint) return *hint;
        throw ConfigError(std::string("no ") + what + " given and the config carries no search." + what);
    }

    fs::path path(const std::string& name) const { return fs::path(opt.out) / name; }

    void write_json(const std::string& name, json body) const {
        json doc = {{"manifest", manifest}};
        for (auto& [k, v] : body.items()) doc[k] = v;
        std::ofstream f(path(name));
        f << doc.dump(2) << "\n";
    }

    // CSV whose first line records the manifest that produced it.
    void write_csv(const std::string& name, const json& extra, const std::string& header, const std::string& rows) const {
        json m = manifest;
        for (auto& [k, v] : extra.items()) m[k] = v;
        std::ofstream f(path(name));
        f << "# manifest: " << m.dump() << "\n" << header << "\n" << rows;
    }
};

// ---- dispersion ------------------------------------------------------------

int cmd_dispersion(const Options& o) {
    Run run("dispersion", o);
    const auto& c = run.cfg.lattice;
    const auto kr = run.range(o.kappa_range, run.cfg.search.kappa_range, "kappa_range");
    const auto wr = run.range(o.omega_range, run.cfg.search.omega_range, "omega_range");
    const std::size_t n = o.grid ? o.grid : 201;
    const auto grid = linspace(kr[0], kr[1], n);
    const std::size_t centre = grid.size() / 2;

    const auto roots = detail::seed_roots(c, grid[centre], wr[0], wr[1], 400);
    if (roots.empty()) throw NoneFound("no branch near zero: ell has no root with Re omega in the window at kappa = " + num(grid[centre]));
    cplx w = roots.front();
    for (const cplx r : roots)
        if (std::abs(r.imag()) < std::abs(w.imag())) w = r;
    const auto branch = detail::trace_branch(c, grid, centre, w);

    std::ostringstream rows;
    for (const auto& s : branch)
        rows << num(s.kappa) << "," << num(s.omega.real()) << "," << num(s.omega.imag()) << "," << num(s.residual) << "\n";
    run.write_csv("dispersion.csv", {{"kappa_range", kr}, {"omega_range", wr}, {"grid", n}}, "kappa,omega_re,omega_im,residual", rows.str());
    std::cout << "traced " << branch.size() << " points -> " << run.path("dispersion.csv").string() << "\n";
    return ok;
}

// ---- transmission ----------------------------------------------------------

std::string transmission_rows(const LatticeConfig& c, double kappa, const std::vector<double>& omegas) {
    std::ostringstream rows;
    bool have_prev = false;
    double prev_w = 0.0, prev_raw = 0.0, phase = 0.0;
    for (const double w : omegas) {
        ScatteringSolution sol;
        try {
            sol = solve_scattering_consistent({kappa, w}, c);
        } catch (const WoodAnomalyError& e) {
            rows << "# warning: omega=" << num(w) << " skipped (Wood anomaly, order " << e.order << ")\n";
            have_prev = false;
            continue;
        } catch (const RegimeError& e) {
            rows << "# warning: omega=" << num(w) << " skipped (" << e.what() << ")\n";
            have_prev = false;
            continue;
        } catch (const PendantPoleError& e) {
            rows << "# warning: omega=" << num(w) << " skipped (pendant resonance)\n";
            have_prev = false;
            continue;
        }
        if (sol.propagating_orders != 1) {
            rows << "# warning: omega=" << num(w) << " skipped (" << sol.propagating_orders << " propagating orders)\n";
            have_prev = false;
            continue;
        }
        const double raw = std::arg(sol.T_amp);
        if (!have_prev) {
            phase = raw;
        } else {
            try {
                phase += detail::phase_increment(c, kappa, prev_w, w, prev_raw, raw, 0);
            } catch (const Error&) {
                phase += detail::wrapped(raw - prev_raw);
            }
        }
        have_prev = true;
        prev_w = w;
        prev_raw = raw;
        rows << num(w) << "," << num(std::abs(sol.T_amp)) << "," << num(std::abs(sol.R)) << "," << num(phase) << "\n";
    }
    return rows.str();
}

int cmd_transmission(const Options& o) {
    Run run("transmission", o);
    const auto& c = run.cfg.lattice;
    const auto wr = run.range(o.omega_range, run.cfg.search.omega_range, "omega_range");
    const std::size_t n = o.grid ? o.grid : 401;
    std::vector<double> kappas = o.kappa;
    if (kappas.empty()) {
        if (o.kappa_range.size() != 2) throw ConfigError("transmission needs --kappa or --kappa-range");
        kappas = linspace(o.kappa_range[0], o.kappa_range[1], 5);
    }
    const auto omegas = linspace(wr[0], wr[1], n);

    // Curves are independent; files are written in order afterwards.
    std::vector<std::future<std::string>> jobs;
    for (const double k : kappas) jobs.push_back(std::async(std::launch::async, transmission_rows, std::cref(c), k, std::cref(omegas)));
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        const std::string name = "transmission_" + std::to_string(i) + ".csv";
        run.write_csv(name, {{"kappa", kappas[i]}, {"omega_range", wr}, {"grid", n}}, "omega,T,R,phase_rad", jobs[i].get());
        std::cout << "kappa " << num(kappas[i]) << " -> " << run.path(name).string() << "\n";
    }
    return ok;
}

// ---- find-mode / tune ------------------------------------------------------

GuidedMode require_mode(const LatticeConfig& c, std::array<double, 2> kr, std::array<double, 2> wr) {
    auto m = find_real_mode(c, kr[0], kr[1], wr[0], wr[1]);
    if (!m) {
        const auto best = scan_branch_minimum(c, kr[0], kr[1], wr[0], wr[1]);
        throw NoneFound("none found: smallest |Im omega| on the traced branches is " + num(best.loss) + " at kappa = " + num(best.kappa));
    }
    return *m;
}

int report_mode(const Run& run, const GuidedMode& m, const LatticeConfig& c, json extra = json::object()) {
    const auto rep = verify_mode(m, c);
    json body = {{"mode", mode_json(m, rep)}};
    for (auto& [k, v] : extra.items()) body[k] = v;
    run.write_json("mode.json", body);
    std::cout << "mode kappa0 = " << num(m.kappa0) << ", omega0 = " << num(m.omega0) << (rep.verified() ? " (verified)" : " (REJECTED: " + rep.failing + ")")
              << " -> " << run.path("mode.json").string() << "\n";
    return rep.verified() ? ok : numerical_failure;
}

int cmd_find_mode(const Options& o) {
    Run run("find-mode", o);
    const auto kr = run.range(o.kappa_range, run.cfg.search.kappa_range, "kappa_range");
    const auto wr = run.range(o.omega_range, run.cfg.search.omega_range, "omega_range");
    run.manifest["kappa_range"] = kr;
    run.manifest["omega_range"] = wr;
    return report_mode(run, require_mode(run.cfg.lattice, kr, wr), run.cfg.lattice);
}

int cmd_tune(const Options& o) {
    Run run("tune", o);
    const auto kr = run.range(o.kappa_range, run.cfg.search.kappa_range, "kappa_range");
    const auto wr = run.range(o.omega_range, run.cfg.search.omega_range, "omega_range");
    const auto iv = run.range(o.interval, run.cfg.search.tune_interval, "tune_interval");
    run.manifest["kappa_range"] = kr;
    run.manifest["omega_range"] = wr;
    run.manifest["tune_interval"] = iv;
    TuneOptions topt;
    topt.lo = iv[0];
    topt.hi = iv[1];
    const auto res = tune_structure(run.cfg.lattice, kr[0], kr[1], wr[0], wr[1], topt);

    json tuned = to_json(res.config);
    tuned["search"] = {{"kappa_range", kr}, {"omega_range", wr}, {"tune_interval", iv}};
    std::ofstream(run.path("tuned_config.json")) << tuned.dump(2) << "\n";
    std::cout << "tuned " << res.config.tunable->path << " = " << num(res.parameter) << " after " << res.evaluations << " evaluations -> "
              << run.path("tuned_config.json").string() << "\n";
    return report_mode(run, res.mode, res.config, {{"tuned_parameter", {{"path", res.config.tunable->path}, {"value", res.parameter}}}, {"loss", res.loss}});
}

// ---- analyze ---------------------------------------------------------------

template <class F>
auto stage(const char* label, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const NoneFound&) {
        throw;
    } catch (const std::exception& e) {
        throw NumericalError(std::string("stage ") + label + ": " + e.what());
    }
}

int cmd_analyze(const Options& o) {
    Run run("analyze", o);
    const auto& c = run.cfg.lattice;
    const auto kr = run.range(o.kappa_range, run.cfg.search.kappa_range, "kappa_range");
    const auto wr = run.range(o.omega_range, run.cfg.search.omega_range, "omega_range");
    std::vector<double> offsets = o.kappa.empty() ? std::vector<double>{-0.02, -0.01, -0.005, 0.005, 0.01, 0.02} : o.kappa;
    run.manifest["kappa_range"] = kr;
    run.manifest["omega_range"] = wr;
    run.manifest["kappa_tilde"] = offsets;

    const auto mode = stage("mode search", [&] { return require_mode(c, kr, wr); });
    const auto rep = stage("mode verification", [&] { return verify_mode(mode, c); });
    if (!rep.verified()) throw NumericalError("stage mode verification: failing metric " + rep.failing);
    const auto coeffs = stage("expansion", [&] { return extract_coefficients(mode, c); });
    const auto rel = verify_relations(coeffs);

    json body = {{"mode", mode_json(mode, rep)}, {"coefficients", coefficients_json(coeffs)}, {"relations", relations_json(rel)}};
    if (coeffs.case_id == 2) body["fano"] = fano_json(fano_reduce(coeffs, 0.01));
    body["comparisons"] = json::array();
    const std::size_t n = o.grid ? o.grid : 1001;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const double kt = offsets[i];
        const auto cmp = stage("lineshape comparison", [&] { return compare_lineshape(c, coeffs, kt, n); });
        const auto phase = stage("phase", [&] { return phase_curve(c, coeffs.kappa0 + kt, cmp.omega); });
        const auto pd = peak_dip_locations(coeffs, coeffs.kappa0 + kt);
        const auto pk = stage("peak search", [&] { return exact_extremum(c, coeffs.kappa0 + kt, cmp.window_lo, cmp.window_hi, +1); });
        const auto dp = stage("dip search", [&] { return exact_extremum(c, coeffs.kappa0 + kt, cmp.window_lo, cmp.window_hi, -1); });
        std::ostringstream rows;
        for (std::size_t j = 0; j < cmp.omega.size(); ++j)
            rows << num(cmp.omega[j]) << "," << num(cmp.T_exact[j]) << "," << num(cmp.T_model[j]) << "," << num(phase[j]) << "\n";
        const std::string name = "compare_" + std::to_string(i) + ".csv";
        run.write_csv(name, {{"kappa", coeffs.kappa0 + kt}, {"kappa_tilde", kt}, {"omega_range", {cmp.window_lo, cmp.window_hi}}, {"grid", n}},
                      "omega,T_exact,T_model,phase_rad", rows.str());
        body["comparisons"].push_back({{"kappa_tilde", kt},
                                       {"file", name},
                                       {"window", {cmp.window_lo, cmp.window_hi}},
                                       {"max_abs_error", cmp.max_error},
                                       {"peak", {{"predicted", pd.omega_peak}, {"measured", pk.omega}, {"T", pk.value}}},
                                       {"dip", {{"predicted", pd.omega_dip}, {"measured", dp.omega}, {"T", dp.value}}}});
    }
    run.write_json("analysis.json", body);
    std::cout << "case " << coeffs.case_id << ", relations " << (rel.all_passed() ? "hold" : "VIOLATED") << " -> " << run.path("analysis.json").string()
              << "\n";
    return ok;
}

// ---- validate --------------------------------------------------------------

// Energy identity on every data row, plus a seeded spot check of rows against
// a fresh solve with the manifest's config.
int cmd_validate(const Options& o) {
    if (o.files.empty()) throw ConfigError("validate needs one or more transmission CSV files");
    std::mt19937_64 rng(o.seed);
    int bad = 0;
    for (const auto& file : o.files) {
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot open '" + file + "'");
        std::string line;
        std::getline(in, line);
        const std::string tag = "# manifest: ";
        if (line.rfind(tag, 0) != 0) throw ConfigError(file + ": missing manifest line");
        json man;
        try {
            man = json::parse(line.substr(tag.size()));
        } catch (const json::parse_error& e) {
            throw ConfigError(file + ": manifest is not valid JSON");
        }
        if (man.value("command", "") != "transmission") throw ConfigError(file + ": not a transmission file");
        const LatticeConfig c = parse_config(man.at("config")).lattice;
        const double kappa = man.at("kappa").get<double>();
        std::getline(in, line);
        if (line != "omega,T,R,phase_rad") throw ConfigError(file + ": unexpected header '" + line + "'");

        std::vector<std::array<double, 3>> rows;
        std::size_t warnings = 0;
        double worst = 0.0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line[0] == '#') {
                ++warnings;
                continue;
            }
            std::array<double, 4> v{};
            std::stringstream ss(line);
            std::string cell;
            for (double& x : v) {
                if (!std::getline(ss, cell, ',')) throw ConfigError(file + ": short row '" + line + "'");
                x = std::stod(cell);
            }
            worst = std::max(worst, std::abs(v[1] * v[1] + v[2] * v[2] - 1.0));
            rows.push_back({v[0], v[1], v[2]});
        }
        double spot = 0.0;
        if (!rows.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
            for (std::size_t s = 0; s < std::min(o.samples, rows.size()); ++s) {
                const auto& r = rows[pick(rng)];
                const auto sol = solve_scattering_consistent({kappa, r[0]}, c);
                spot = std::max({spot, std::abs(std::abs(sol.T_amp) - r[1]), std::abs(std::abs(sol.R) - r[2])});
            }
        }
        const bool pass = worst < 1e-10 && spot < 1e-10;
        bad += !pass;
        std::cout << (pass ? "ok   " : "FAIL ") << file << ": " << rows.size() << " rows, " << warnings << " warnings, max |T^2+R^2-1| = " << num(worst)
                  << ", max spot-check deviation = " << num(spot) << "\n";
    }
    return bad ? numerical_failure : ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slabfano: transmission anomalies near non-robust guided modes of a periodic lattice slab"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* s, bool needs_config = true) {
        auto* cfg = s->add_option("--config", o.config, "lattice config (JSON)");
        if (needs_config) cfg->required();
        s->add_option("--out", o.out, "output directory")->capture_default_str();
        s->add_option("--seed", o.seed, "seed for randomized sampling")->capture_default_str();
    };
    auto ranges = [&](CLI::App* s) {
        s->add_option("--kappa-range", o.kappa_range, "kappa interval: lo hi")->expected(2);
        s->add_option("--omega-range", o.omega_range, "omega interval: lo hi")->expected(2);
    };

    auto* disp = app.add_subcommand("dispersion", "trace the complex branch omega(kappa) nearest the real axis");
    common(disp);
    ranges(disp);
    disp->add_option("--grid", o.grid, "kappa samples (default 201)");

    auto* trans = app.add_subcommand("transmission", "per-kappa curves T, R and phase against omega");
    common(trans);
    ranges(trans);
    trans->add_option("--kappa", o.kappa, "kappa values")->delimiter(',');
    trans->add_option("--grid", o.grid, "omega samples (default 401)");

    auto* find = app.add_subcommand("find-mode", "locate and verify a real point of the dispersion relation");
    common(find);
    ranges(find);

    auto* tune = app.add_subcommand("tune", "tune the config's tunable parameter until a real point appears");
    common(tune);
    ranges(tune);
    tune->add_option("--interval", o.interval, "parameter search interval: lo hi")->expected(2);

    auto* analyze = app.add_subcommand("analyze", "expansion coefficients, relations, Fano report and lineshape comparisons");
    common(analyze);
    ranges(analyze);
    analyze->add_option("--kappa", o.kappa, "offsets kappa - kappa0 to compare at")->delimiter(',');
    analyze->add_option("--grid", o.grid, "omega samples per comparison window (default 1001)");

    auto* validate = app.add_subcommand("validate", "check the energy identity of transmission CSV files");
    common(validate, false);
    validate->add_option("files", o.files, "transmission CSV files")->required();
    validate->add_option("--samples", o.samples, "rows re-solved per file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*disp) return cmd_dispersion(o);
        if (*trans) return cmd_transmission(o);
        if (*find) return cmd_find_mode(o);
        if (*tune) return cmd_tune(o);
        if (*analyze) return cmd_analyze(o);
        if (*validate) return cmd_validate(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const NoneFound& e) {
        std::cerr << e.what() << "\n";
        return none_found;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    }
    return config_error;
}
