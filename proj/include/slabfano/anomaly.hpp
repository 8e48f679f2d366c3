#pragma once

// Closed-form anomaly predictions built from ExpansionCoefficients, and the
// exact-scattering measurements they are compared against.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "expansion.hpp"

namespace slabfano {

// T_hat = t0 |w + l1 k + t2 k^2| / |w + l1 k + l2 k^2| (1 + Re eta1 w + Re eta2 k), clipped to [0, 1].
inline double formula_case1(const ExpansionCoefficients& c, double kappa, double omega) {
    if (c.case_id != 1) throw Error("formula_case1 needs Case 1 coefficients");
    const double k = kappa - c.kappa0;
    const double w = omega - c.omega0;
    const cplx num = w + c.l1 * k + c.t2 * k * k;
    const cplx den = w + c.l1 * k + c.l2 * k * k;
    if (std::abs(den) < 1e-14) {
        if (std::abs(num) < 1e-14) return c.t0;
        throw NumericalError("formula_case1: vanishing denominator off the mode");
    }
    const double v = c.t0 * std::abs(num) / std::abs(den) * (1.0 + c.eta1.real() * w + c.eta2.real() * k);
    return std::clamp(v, 0.0, 1.0);
}

inline double formula_case2_squared(const ExpansionCoefficients& c, double kappa, double omega) {
    const double k2 = (kappa - c.kappa0) * (kappa - c.kappa0);
    const double w = omega - c.omega0;
    const double bt = c.t0 * c.t0 * std::norm(w + c.t2 * k2) * (1.0 + c.eta * w) * (1.0 + c.eta * w);
    const double br = c.r0 * c.r0 * std::norm(w + c.r2 * k2);
    if (bt + br < 1e-28) return c.t0 * c.t0;
    return bt / (bt + br);
}

inline double formula_case2(const ExpansionCoefficients& c, double kappa, double omega) {
    if (c.case_id != 2) throw Error("formula_case2 needs Case 2 coefficients");
    return std::sqrt(formula_case2_squared(c, kappa, omega));
}

inline double formula_transmission(const ExpansionCoefficients& c, double kappa, double omega) {
    return c.case_id == 1 ? formula_case1(c, kappa, omega) : formula_case2(c, kappa, omega);
}

// (q + f)^2 / (1 + f^2) with f = (omega - omega_res) / (Gamma / 2).
inline double fano_shape(double q, double Gamma, double omega_res, double omega) {
    const double f = (omega - omega_res) / (0.5 * Gamma);
    return (q + f) * (q + f) / (1.0 + f * f);
}

struct FanoReport {
    std::array<double, 3> residuals{}; // max|Im r2,t2|, |eta|, |r0^2 r2 + t0^2 t2|
    std::array<bool, 3> met{};
    std::optional<double> Gamma;
    std::optional<double> q;
    double kappa_tilde = 0.0;
    bool reduced() const { return Gamma.has_value(); }
};

// Reduction to the classic Fano shape; needs real r2, t2, a flat background
// (eta = 0) and r0^2 r2 + t0^2 t2 = 0. Each condition is tested at 1e-3
// relative to the coefficient scale max(|r2|, |t2|) (eta against 1).
inline FanoReport fano_reduce(const ExpansionCoefficients& c, double kappa_tilde, double tol = 1e-3) {
    if (c.case_id != 2) throw Error("fano_reduce needs Case 2 coefficients");
    FanoReport rep;
    rep.kappa_tilde = kappa_tilde;
    const double scale = std::max({std::abs(c.r2), std::abs(c.t2), 1e-300});
    rep.residuals[0] = std::max(std::abs(c.r2.imag()), std::abs(c.t2.imag()));
    rep.residuals[1] = std::abs(c.eta);
    rep.residuals[2] = std::abs(c.r0 * c.r0 * c.r2 + c.t0 * c.t0 * c.t2);
    rep.met[0] = rep.residuals[0] < tol * scale;
    rep.met[1] = rep.residuals[1] < tol;
    rep.met[2] = rep.residuals[2] < tol * scale;
    if (rep.met[0] && rep.met[1] && rep.met[2]) {
        const double r = c.r2.real(), t = c.t2.real();
        const double S = std::sqrt((r * c.r0) * (r * c.r0) + (t * c.t0) * (t * c.t0));
        rep.Gamma = 2.0 * kappa_tilde * kappa_tilde * S;
        rep.q = t / S;
    }
    return rep;
}

struct PeakDip {
    double omega_peak = 0.0; // zero curve of a: full transmission
    double omega_dip = 0.0;  // zero curve of b: zero transmission
};

inline PeakDip peak_dip_locations(const ExpansionCoefficients& c, double kappa) {
    const double k = kappa - c.kappa0;
    const double shift = c.omega0 - c.l1.real() * k;
    return {shift - c.r2.real() * k * k, shift - c.t2.real() * k * k};
}

// Comparison window |w + l1 k| <= width_factor max(|l2|, |r2|, |t2|) k^2.
inline std::pair<double, double> anomaly_window(const ExpansionCoefficients& c, double kappa_tilde, double width_factor = 20.0) {
    const double centre = c.omega0 - c.l1.real() * kappa_tilde;
    const double half = width_factor * std::max({std::abs(c.l2), std::abs(c.r2), std::abs(c.t2)}) * kappa_tilde * kappa_tilde;
    return {centre - half, centre + half};
}

struct AnomalyPrediction {
    double kappa = 0.0;
    std::vector<double> omega;
    std::vector<double> T_model;
    double omega_peak = 0.0;
    double omega_dip = 0.0;
    std::optional<FanoReport> fano;
};

inline AnomalyPrediction predict_anomaly(const ExpansionCoefficients& c, double kappa, const std::vector<double>& omega_grid) {
    AnomalyPrediction p;
    p.kappa = kappa;
    p.omega = omega_grid;
    for (const double w : omega_grid) p.T_model.push_back(formula_transmission(c, kappa, w));
    const auto pd = peak_dip_locations(c, kappa);
    p.omega_peak = pd.omega_peak;
    p.omega_dip = pd.omega_dip;
    if (c.case_id == 2) p.fano = fano_reduce(c, kappa - c.kappa0);
    return p;
}

inline cplx transmission_amplitude(const LatticeConfig& cfg, double kappa, double omega) {
    return solve_scattering_consistent({kappa, omega}, cfg).T_amp;
}

inline double exact_transmission(const LatticeConfig& cfg, double kappa, double omega) {
    return std::abs(transmission_amplitude(cfg, kappa, omega));
}

// d arg(b/ell) / d omega = Im(T'/T), central difference with step h.
inline double phase_slope(const LatticeConfig& cfg, double kappa, double omega, double h) {
    const cplx tp = transmission_amplitude(cfg, kappa, omega + h);
    const cplx tm = transmission_amplitude(cfg, kappa, omega - h);
    const cplx t0 = transmission_amplitude(cfg, kappa, omega);
    return ((tp - tm) / (2.0 * h * t0)).imag();
}

namespace detail {

inline double wrapped(double d) { return std::remainder(d, 2.0 * pi); }

// Phase change across [w0, w1], bisecting until each piece moves < pi/2.
// A jump that survives down to machine resolution is a real zero of b
// (exact zero transmission); it is carried as +pi.
inline double phase_increment(const LatticeConfig& cfg, double kappa, double w0, double w1, double ph0, double ph1, int depth) {
    const double d = wrapped(ph1 - ph0);
    if (std::abs(d) < 0.5 * pi) return d;
    if (depth > 60 || std::abs(w1 - w0) < 1e-13 * (1.0 + std::abs(w0))) {
        // Near the zero rounding noise in T blurs the jump away from +-pi;
        // only accept it when T really vanishes there.
        const double tmin = std::abs(transmission_amplitude(cfg, kappa, 0.5 * (w0 + w1)));
        if (tmin < 1e-6) return d < 0.0 ? d + 2.0 * pi : d;
        throw NumericalError("phase_curve: unresolvable phase jump");
    }
    const double wm = 0.5 * (w0 + w1);
    const double pm = std::arg(transmission_amplitude(cfg, kappa, wm));
    return phase_increment(cfg, kappa, w0, wm, ph0, pm, depth + 1) + phase_increment(cfg, kappa, wm, w1, pm, ph1, depth + 1);
}

} // namespace detail

// Unwrapped arg(b/ell) = arg T_amp along an increasing omega grid.
inline std::vector<double> phase_curve(const LatticeConfig& cfg, double kappa, const std::vector<double>& omega_grid) {
    std::vector<double> out;
    if (omega_grid.empty()) return out;
    double prev = std::arg(transmission_amplitude(cfg, kappa, omega_grid[0]));
    out.push_back(prev);
    for (std::size_t i = 1; i < omega_grid.size(); ++i) {
        const double cur = std::arg(transmission_amplitude(cfg, kappa, omega_grid[i]));
        out.push_back(out.back() + detail::phase_increment(cfg, kappa, omega_grid[i - 1], omega_grid[i], prev, cur, 0));
        prev = cur;
    }
    return out;
}

// Max |d phase / d omega| over [lo, hi]: dense scan, then golden refinement.
inline double max_phase_slope(const LatticeConfig& cfg, double kappa, double lo, double hi, std::size_t points = 801) {
    const double h = 1e-5 * (hi - lo);
    const auto grid = linspace(lo, hi, points);
    std::size_t imax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = std::abs(phase_slope(cfg, kappa, grid[i], h));
        if (s > best) best = s, imax = i;
    }
    const double a = grid[imax > 0 ? imax - 1 : imax];
    const double b = grid[imax + 1 < grid.size() ? imax + 1 : imax];
    const auto g = golden_section([&](double w) { return -std::abs(phase_slope(cfg, kappa, w, h)); }, a, b, 1e-6 * (b - a));
    return std::max(best, -g.value);
}

struct Extremum {
    double omega = 0.0;
    double value = 0.0;
};

// Extremum of exact T over [lo, hi]; sign = +1 for the peak, -1 for the dip.
inline Extremum exact_extremum(const LatticeConfig& cfg, double kappa, double lo, double hi, int sign, std::size_t points = 801) {
    const auto grid = linspace(lo, hi, points);
    std::size_t ibest = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = sign * exact_transmission(cfg, kappa, grid[i]);
        if (v > best) best = v, ibest = i;
    }
    const double a = grid[ibest > 0 ? ibest - 1 : ibest];
    const double b = grid[ibest + 1 < grid.size() ? ibest + 1 : ibest];
    const auto g = golden_section([&](double w) { return -sign * exact_transmission(cfg, kappa, w); }, a, b, 1e-13 * (1.0 + std::abs(a)));
    return {g.x, exact_transmission(cfg, kappa, g.x)};
}

struct LineshapeComparison {
    double kappa_tilde = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    double max_error = 0.0;
    double omega_at_max = 0.0;
    std::vector<double> omega, T_exact, T_model;
};

inline LineshapeComparison compare_lineshape(const LatticeConfig& cfg, const ExpansionCoefficients& c, double kappa_tilde,
                                             std::size_t points = 1001) {
    LineshapeComparison cmp;
    cmp.kappa_tilde = kappa_tilde;
    std::tie(cmp.window_lo, cmp.window_hi) = anomaly_window(c, kappa_tilde);
    const double kappa = c.kappa0 + kappa_tilde;
    cmp.omega = linspace(cmp.window_lo, cmp.window_hi, points);
    for (const double w : cmp.omega) {
        const double te = exact_transmission(cfg, kappa, w);
        const double tm = formula_transmission(c, kappa, w);
        cmp.T_exact.push_back(te);
        cmp.T_model.push_back(tm);
        if (std::abs(te - tm) > cmp.max_error) {
            cmp.max_error = std::abs(te - tm);
            cmp.omega_at_max = w;
        }
    }
    return cmp;
}

struct EnhancementScaling {
    double slope = 0.0;
    std::vector<double> kappa_tilde;
    std::vector<double> enhancement;
    std::vector<double> omega_at_max;
};

// Peak field enhancement near the anomaly for each offset, and the log-log
// slope against |kappa_tilde|. Offsets are visited from the smallest up so each
// leaky root is continued from the previous one, starting at the mode.
inline EnhancementScaling enhancement_scaling(const LatticeConfig& cfg, const GuidedMode& mode, std::vector<double> kappa_list,
                                              double window_widths = 10.0) {
    EnhancementScaling out;
    std::sort(kappa_list.begin(), kappa_list.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    cplx w_prev = mode.omega0;
    for (const double kt : kappa_list) {
        const double kappa = mode.kappa0 + kt;
        const auto trace = trace_dispersion(cfg, {mode.kappa0 + 0.25 * kt, mode.kappa0 + 0.5 * kt, kappa}, w_prev);
        const cplx wr = trace.back().omega;
        const double half = window_widths * std::max(std::abs(wr.imag()), 1e-12);
        const double lo = wr.real() - half, hi = wr.real() + half;
        const auto grid = linspace(lo, hi, 401);
        std::size_t ib = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double e = field_enhancement({kappa, grid[i]}, cfg);
            if (e > best) best = e, ib = i;
        }
        if (ib == 0 || ib + 1 == grid.size()) throw NumericalError("enhancement_scaling: maximum on the window edge; widen the omega window");
        const auto g = golden_section([&](double w) { return -field_enhancement({kappa, w}, cfg); }, grid[ib - 1], grid[ib + 1],
                                      1e-14 * (1.0 + std::abs(grid[ib])));
        out.kappa_tilde.push_back(kt);
        out.enhancement.push_back(std::max(best, -g.value));
        out.omega_at_max.push_back(g.x);
    }
    for (std::size_t i = 1; i < out.enhancement.size(); ++i)
        if (!(out.enhancement[i] < out.enhancement[i - 1]))
            throw NumericalError("enhancement_scaling: enhancement not monotone in |kappa_tilde|; refine the omega window");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < out.enhancement.size(); ++i) {
        lx.push_back(std::log(std::abs(out.kappa_tilde[i])));
        ly.push_back(std::log(out.enhancement[i]));
    }
    out.slope = ls_slope(lx, ly);
    return out;
}

} // namespace slabfano
