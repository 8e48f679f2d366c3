#pragma once

#include <slabfano/config_io.hpp>
#include <slabfano/slabfano.hpp>

#include <fstream>
#include <random>
#include <set>
#include <string>

namespace slabfano::testing {

inline std::string config_path(const std::string& name) { return std::string(SLABFANO_CONFIG_DIR) + "/" + name; }

inline ConfigFile shipped_file(const std::string& name) { return load_config(config_path(name)); }

inline LatticeConfig shipped(const std::string& name) { return shipped_file(name).lattice; }

// Reference values from the brute-force strip solver (tests/oracles).
inline const json& frozen() {
    static const json j = json::parse(std::ifstream(SLABFANO_ORACLE_FILE));
    return j;
}

inline LatticeConfig config_from(const json& j) { return parse_config(j).lattice; }

inline cplx cplx_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

// Two defects d = -1.5 at (0,0), (1,0) in a period-2 cell, optionally with a pendant.
inline LatticeConfig two_defect(bool pendant) {
    LatticeConfig c;
    c.period = 2;
    c.defects = {{0, 0, -1.5}, {1, 0, -1.5}};
    if (pendant) c.pendants = {{0, 0.5, 0.3}};
    return c;
}

inline LatticeConfig empty_scatterer(int N = 3) {
    LatticeConfig c;
    c.period = N;
    c.defects = {{0, 0, 0.0}};
    return c;
}

// Random lossless cell: 1-4 defects on distinct sites, up to two pendants.
inline LatticeConfig random_config(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nper(1, 4), ndef(1, 4), npend(0, 2), z(-2, 2);
    std::uniform_real_distribution<double> d(-4.0, 4.0), mu(0.0, 3.0), g(-1.0, 1.0);
    LatticeConfig c;
    c.period = nper(rng);
    const int want = ndef(rng);
    std::set<std::pair<int, int>> used;
    std::uniform_int_distribution<int> x(0, c.period - 1);
    while (static_cast<int>(c.defects.size()) < want) {
        const int xi = x(rng), zi = z(rng);
        if (used.insert({xi, zi}).second) c.defects.push_back({xi, zi, d(rng)});
    }
    std::uniform_int_distribution<std::size_t> host(0, c.defects.size() - 1);
    for (int k = npend(rng); k > 0; --k) c.pendants.push_back({host(rng), mu(rng), g(rng)});
    c.validate();
    return c;
}

// Real (kappa, omega) with only order 0 propagating, clear of Wood anomalies
// and pendant poles.
inline SpectralPoint random_regime_point(std::mt19937_64& rng, const LatticeConfig& c) {
    std::uniform_real_distribution<double> k(-pi / c.period, pi / c.period), w(0.02, 2.0);
    for (;;) {
        const double kappa = k(rng), omega = w(rng);
        if (!in_single_order_regime(kappa, omega, c.period, 1e-6)) continue;
        bool near_pole = false;
        for (const auto& p : c.pendants) near_pole |= std::abs(omega * omega - p.mu) < 1e-6;
        if (!near_pole) return {kappa, omega};
    }
}

// Max relative residual of a total-degree-4 polynomial fit in (dk, dw) to
// samples of f on a polydisc of radius r. Keep r well inside the distance to
// the nearest pendant pole or Wood point: truncation error goes as (r/R)^5.
template <class F>
inline double polydisc_fit_residual(F&& f, cplx k0, cplx w0, double r) {
    std::vector<std::pair<cplx, cplx>> pts;
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
            for (double s : {0.5, 1.0})
                pts.push_back({s * r * std::polar(1.0, 2 * pi * (a + 0.3) / 8), s * r * std::polar(1.0, 2 * pi * (b + 0.7) / 8)});
    std::vector<std::pair<int, int>> mono;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; i + j <= 4; ++j) mono.push_back({i, j});
    Eigen::MatrixXcd M(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(mono.size()));
    Eigen::VectorXcd y(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t p = 0; p < pts.size(); ++p) {
        for (std::size_t q = 0; q < mono.size(); ++q)
            M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
                std::pow(pts[p].first / r, mono[q].first) * std::pow(pts[p].second / r, mono[q].second);
        y(static_cast<Eigen::Index>(p)) = f(k0 + pts[p].first, w0 + pts[p].second);
    }
    const Eigen::VectorXcd c = M.colPivHouseholderQr().solve(y);
    return (M * c - y).cwiseAbs().maxCoeff() / y.cwiseAbs().maxCoeff();
}

// A shipped config with its real point and fitted coefficients, found inside
// the config's own search window.
struct Extracted {
    LatticeConfig cfg;
    GuidedMode mode;
    ExpansionCoefficients c;
};

inline Extracted extract(const std::string& name) {
    const auto f = shipped_file(name);
    const auto& s = f.search;
    auto m = find_real_mode(f.lattice, (*s.kappa_range)[0], (*s.kappa_range)[1], (*s.omega_range)[0], (*s.omega_range)[1]);
    if (!m) throw std::runtime_error("no real point in " + name);
    return {f.lattice, *m, extract_coefficients(*m, f.lattice)};
}

inline const Extracted& case1() {
    static const Extracted e = extract("case1_tuned.json");
    return e;
}

inline const Extracted& case2() {
    static const Extracted e = extract("case2_symmetric.json");
    return e;
}

} // namespace slabfano::testing
