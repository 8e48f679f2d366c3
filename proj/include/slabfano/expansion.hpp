#pragma once

// Local coefficients of ell, a, b about a real point (kappa0, omega0):
// zero curves omega = omega0 - c1 k - c2 k^2 - c3 k^3 (k = kappa - kappa0)
// fitted from complex-kappa samples, plus the non-resonant background
// (t0, r0 and the unit-factor slopes) from Cauchy integrals of b/ell.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mode_finder.hpp"

namespace slabfano {

struct ZeroCurveOptions {
    double rho = 0.02;
    std::size_t samples = 12; // per circle
    int degree = 8;
    int radial_steps = 4;     // continuation steps from omega0 out to each sample
};

struct ZeroCurveFit {
    std::array<cplx, 4> c{};    // c[1..3]; c[0] holds omega(0) - omega0
    std::array<double, 4> err{};
    double max_residual = 0.0;
    bool cubic_used = false;
    double rho = 0.0;
    std::vector<cplx> kappa_tilde; // sample offsets
    std::vector<cplx> roots;       // root frequencies at the samples
};

namespace detail {

inline std::vector<cplx> circle_offsets(double r, std::size_t M) {
    std::vector<cplx> out(M);
    for (std::size_t m = 0; m < M; ++m) out[m] = std::polar(r, 2.0 * pi * static_cast<double>(m) / static_cast<double>(M));
    return out;
}

// Root of f(kappa0 + k, .) reached by walking out along the ray from k = 0.
template <class F>
cplx ray_root(F& f, double kappa0, double omega0, cplx k, int steps) {
    cplx w = omega0, w_prev = omega0;
    for (int s = 1; s <= steps; ++s) {
        const cplx ks = k * (static_cast<double>(s) / steps);
        const cplx guess = s >= 2 ? 2.0 * w - w_prev : w;
        const cplx kap = kappa0 + ks;
        w_prev = w;
        w = newton_omega([&](cplx om) { return f(kap, om); }, guess);
    }
    return w;
}

} // namespace detail

// f(kappa, omega) analytic near the real point with a simple omega-root.
template <class F>
ZeroCurveFit fit_zero_curve(F&& f, double kappa0, double omega0, const ZeroCurveOptions& opt = {}) {
    ZeroCurveFit out;
    out.rho = opt.rho;
    std::vector<cplx> xs, ys;
    std::array<std::vector<cplx>, 2> cx, cy;
    for (int c = 0; c < 2; ++c) {
        const double r = c == 0 ? opt.rho : 0.5 * opt.rho;
        for (const cplx k : detail::circle_offsets(r, opt.samples)) {
            cplx w;
            try {
                w = detail::ray_root(f, kappa0, omega0, k, opt.radial_steps);
            } catch (const ConvergenceError& e) {
                throw ConvergenceError(std::string("fit_zero_curve: Newton failed at a circle sample: ") + e.what());
            }
            xs.push_back(k);
            ys.push_back(w - omega0);
            cx[static_cast<std::size_t>(c)].push_back(k);
            cy[static_cast<std::size_t>(c)].push_back(w - omega0);
        }
    }
    out.kappa_tilde = xs;
    for (const cplx y : ys) out.roots.push_back(y + omega0);

    const auto full = fit_powers(xs, ys, power_range(0, opt.degree));
    std::vector<int> no_cubic = power_range(0, opt.degree);
    no_cubic.erase(no_cubic.begin() + 3);
    const auto reduced = fit_powers(xs, ys, no_cubic);
    const auto outer = fit_powers(cx[0], cy[0], power_range(0, opt.degree));
    const auto inner = fit_powers(cx[1], cy[1], power_range(0, opt.degree));
    if (full.max_residual > 1e-4 * opt.rho * opt.rho)
        throw ConvergenceError("fit_zero_curve: residual " + std::to_string(full.max_residual) + " exceeds 1e-4 rho^2 (analyticity suspect)");

    out.max_residual = full.max_residual;
    const double noise = std::max(full.max_residual, 1e-13 * (1.0 + std::abs(omega0)));
    for (std::size_t k = 0; k < 4; ++k) {
        const double scale = std::pow(opt.rho, static_cast<double>(k));
        out.c[k] = k == 0 ? full.coeffs[0] : -full.coeffs[k];
        out.err[k] = std::abs(outer.coeffs[k] - inner.coeffs[k]) + noise / scale;
    }
    // The cubic is kept only when it buys at least a factor 10 in residual.
    out.cubic_used = reduced.max_residual >= 10.0 * full.max_residual;
    if (!out.cubic_used) {
        out.c[3] = 0.0;
        out.err[3] = std::numeric_limits<double>::infinity();
    }
    return out;
}

struct CoefficientErrors {
    double l1 = 0, l2 = 0, l3 = 0, r1 = 0, r2 = 0, t1 = 0, t2 = 0;
    double r0 = 0, t0 = 0, eta1 = 0, eta2 = 0, eta = 0;
};

struct ExpansionCoefficients {
    double kappa0 = 0.0;
    double omega0 = 0.0;
    cplx l1, l2, l3;
    cplx r1, r2, r3;
    cplx t1, t2, t3;
    double r0 = 0.0;        // sqrt(1 - t0^2)
    double t0 = 0.0;
    double r0_direct = 0.0; // |a/ell| limit measured independently of t0
    cplx eta1, eta2;        // Case 1 unit-factor slopes
    double eta = 0.0;       // Case 2 background slope
    double theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;
    CoefficientErrors err;
    int case_id = 1;
    bool ambiguous = false;
    double rho = 0.0;
};

struct CaseClassification {
    int case_id = 1;
    bool ambiguous = false;
};

// Case 2 iff |l1| < 10 x its error; 3x..10x is flagged as ambiguous.
inline CaseClassification classify_case(cplx l1, double l1_err) {
    const double m = std::abs(l1);
    CaseClassification c;
    c.case_id = m < 10.0 * l1_err ? 2 : 1;
    c.ambiguous = m >= 3.0 * l1_err && m < 10.0 * l1_err;
    return c;
}

inline CaseClassification classify_case(const ExpansionCoefficients& c) { return classify_case(c.l1, c.err.l1); }

// Distance from (kappa0, omega0) to the nearest Wood anomaly or pendant pole,
// measured along kappa at fixed omega0 and along omega at fixed kappa0.
inline double analyticity_radius(double kappa0, double omega0, const LatticeConfig& cfg) {
    double best = std::numeric_limits<double>::infinity();
    const int N = cfg.period;
    for (int p = 0; p < N; ++p) {
        const double shift = 2.0 * pi * p / N;
        for (const double tau : {0.0, 1.0}) {
            const cplx v = omega0 * omega0 / 4.0 - tau;
            for (const double sgn : {1.0, -1.0}) {
                const cplx a = std::asin(sgn * std::sqrt(v));
                for (int n = -3; n <= 3; ++n) {
                    for (const cplx half : {a + pi * n, pi - a + pi * n}) {
                        const cplx kap = 2.0 * half - shift;
                        best = std::min(best, std::abs(kap - kappa0));
                    }
                }
            }
            const double sk = std::sin((kappa0 + shift) / 2.0);
            const cplx w2 = 4.0 * (sk * sk + tau);
            best = std::min(best, std::abs(std::sqrt(w2) - omega0));
        }
    }
    for (const auto& pd : cfg.pendants) best = std::min(best, std::abs(std::sqrt(cplx(pd.mu)) - omega0));
    return best;
}

inline double default_sample_radius(double kappa0, double omega0, const LatticeConfig& cfg) {
    return std::min(0.02, 0.5 * analyticity_radius(kappa0, omega0, cfg));
}

struct Background {
    double t0 = 0.0;
    double r0 = 0.0;
    double r0_direct = 0.0;
    double t0_err = 0.0;
    double r0_direct_err = 0.0;
    double dT_domega = 0.0; // at kappa0
    double dT_dkappa = 0.0; // at omega0 (Case 1 only)
    cplx eta1, eta2;
    double eta = 0.0;
    double eta_err = 0.0, eta1_err = 0.0, eta2_err = 0.0;
    cplx T_limit_kappa; // lim_{k->0} T_amp(kappa0 + k, omega0), Case 2 only
};

namespace detail {

inline CoefficientTriple triple_at(const LatticeConfig& cfg, cplx kappa, cplx omega) { return coefficient_triple({kappa, omega}, cfg); }

// Taylor data of g along a line through a point, with a two-radius error estimate.
template <class G>
std::pair<std::vector<cplx>, std::array<double, 2>> line_taylor(G&& g, cplx centre, double radius) {
    const auto big = cauchy_taylor(g, centre, radius, 2, 16);
    const auto small = cauchy_taylor(g, centre, 0.5 * radius, 2, 16);
    const double floor0 = 1e-13;
    return {big, {std::abs(big[0] - small[0]) + floor0, std::abs(big[1] - small[1]) + floor0 / radius}};
}

} // namespace detail

inline Background extract_background(const GuidedMode& mode, const LatticeConfig& cfg, const ZeroCurveFit& ell_fit,
                                     const ZeroCurveFit& b_fit, int case_id, double radius = 1e-3) {
    Background bg;
    const double k0 = mode.kappa0;
    const double w0 = mode.omega0;
    auto T_along_omega = [&](cplx w) {
        const auto tr = detail::triple_at(cfg, k0, w);
        return tr.b / tr.ell;
    };
    auto R_along_omega = [&](cplx w) {
        const auto tr = detail::triple_at(cfg, k0, w);
        return tr.a / tr.ell;
    };
    const auto [f, ferr] = detail::line_taylor(T_along_omega, w0, radius);
    const auto [g, gerr] = detail::line_taylor(R_along_omega, w0, radius);
    bg.t0 = std::abs(f[0]);
    bg.t0_err = ferr[0];
    bg.r0_direct = std::abs(g[0]);
    bg.r0_direct_err = gerr[0];
    if (bg.t0 <= -1e-6 || bg.t0 >= 1.0 + 1e-6) throw NumericalError("extract_background: t0 outside (0, 1)");
    bg.r0 = std::sqrt(std::max(0.0, 1.0 - bg.t0 * bg.t0));
    // d|F|/dx = Re(conj(F) F') / |F| along a real line.
    bg.dT_domega = (std::conj(f[0]) * f[1]).real() / bg.t0;
    const double dT_err = ferr[1] + std::abs(f[1]) * ferr[0] / bg.t0;

    if (case_id == 1) {
        bg.eta1 = f[1] / f[0];
        bg.eta1_err = dT_err / bg.t0;
        const cplx l1 = ell_fit.c[1];
        const cplx l2 = ell_fit.c[2];
        const cplx t2 = b_fit.c[2];
        const double krad = std::min(radius, 0.1 * std::abs(l1 / l2));
        auto T_along_kappa = [&](cplx k) {
            const auto tr = detail::triple_at(cfg, k, w0);
            return tr.b / tr.ell;
        };
        const auto [h, herr] = detail::line_taylor(T_along_kappa, k0, krad);
        bg.dT_dkappa = (std::conj(h[0]) * h[1]).real() / std::abs(h[0]);
        bg.eta2 = h[1] / h[0] - (t2 - l2) / l1;
        const double shift_err = (ell_fit.err[2] + b_fit.err[2]) / std::abs(l1) + std::abs((t2 - l2) / (l1 * l1)) * ell_fit.err[1];
        bg.eta2_err = herr[1] / std::abs(h[0]) + std::abs(h[1]) * herr[0] / std::norm(h[0]) + shift_err;
    } else {
        bg.eta = bg.dT_domega / (bg.t0 * bg.r0 * bg.r0);
        bg.eta_err = dT_err / (bg.t0 * bg.r0 * bg.r0) + std::abs(bg.eta) * (ferr[0] / bg.t0) * 3.0;
        // Approached along kappa at omega0, T tends to t0 |t2/l2| instead of t0.
        auto T_along_kappa = [&](cplx k) {
            const auto tr = detail::triple_at(cfg, k, w0);
            return tr.b / tr.ell;
        };
        const auto lim = cauchy_taylor(T_along_kappa, k0, std::min(radius, 0.5 * ell_fit.rho), 1, 16);
        bg.T_limit_kappa = lim[0];
    }
    return bg;
}

// Full coefficient extraction at a verified mode.
inline ExpansionCoefficients extract_coefficients(const GuidedMode& mode, const LatticeConfig& cfg, double rho = 0.0) {
    ExpansionCoefficients c;
    c.kappa0 = mode.kappa0;
    c.omega0 = mode.omega0;
    ZeroCurveOptions opt;
    opt.rho = rho > 0.0 ? rho : default_sample_radius(mode.kappa0, mode.omega0, cfg);
    c.rho = opt.rho;
    auto f_ell = [&](cplx k, cplx w) { return detail::triple_at(cfg, k, w).ell; };
    auto f_a = [&](cplx k, cplx w) { return detail::triple_at(cfg, k, w).a; };
    auto f_b = [&](cplx k, cplx w) { return detail::triple_at(cfg, k, w).b; };
    const auto fl = fit_zero_curve(f_ell, mode.kappa0, mode.omega0, opt);
    const auto fa = fit_zero_curve(f_a, mode.kappa0, mode.omega0, opt);
    const auto fb = fit_zero_curve(f_b, mode.kappa0, mode.omega0, opt);
    c.l1 = fl.c[1], c.l2 = fl.c[2], c.l3 = fl.c[3];
    c.r1 = fa.c[1], c.r2 = fa.c[2], c.r3 = fa.c[3];
    c.t1 = fb.c[1], c.t2 = fb.c[2], c.t3 = fb.c[3];
    c.err.l1 = fl.err[1], c.err.l2 = fl.err[2], c.err.l3 = fl.err[3];
    c.err.r1 = fa.err[1], c.err.r2 = fa.err[2];
    c.err.t1 = fb.err[1], c.err.t2 = fb.err[2];

    const auto cls = classify_case(c.l1, c.err.l1);
    c.case_id = cls.case_id;
    c.ambiguous = cls.ambiguous;

    const auto bg = extract_background(mode, cfg, fl, fb, c.case_id);
    c.t0 = bg.t0;
    c.r0 = bg.r0;
    c.r0_direct = bg.r0_direct;
    c.err.t0 = bg.t0_err;
    c.err.r0 = std::max(bg.r0_direct_err, c.r0 > 0 ? c.t0 * bg.t0_err / c.r0 : 0.0);
    c.eta1 = bg.eta1;
    c.eta2 = bg.eta2;
    c.eta = bg.eta;
    c.err.eta1 = bg.eta1_err;
    c.err.eta2 = bg.eta2_err;
    c.err.eta = bg.eta_err;

    // Phases of the unit factors: arguments of the omega-derivatives at the centre.
    const auto d = cauchy_taylor([&](cplx w) {
        const auto tr = detail::triple_at(cfg, mode.kappa0, w);
        return tr.ell;
    }, mode.omega0, 1e-3, 2, 16);
    const auto da = cauchy_taylor([&](cplx w) { return detail::triple_at(cfg, mode.kappa0, w).a; }, mode.omega0, 1e-3, 2, 16);
    const auto db = cauchy_taylor([&](cplx w) { return detail::triple_at(cfg, mode.kappa0, w).b; }, mode.omega0, 1e-3, 2, 16);
    c.theta1 = std::arg(d[1]);
    c.theta2 = std::arg(da[1]);
    c.theta3 = std::arg(db[1]);
    return c;
}

struct RelationCheck {
    std::string name;
    double residual = 0.0;
    double error = 0.0; // combined first-order propagated fit error
    double ratio() const { return error > 0 ? std::abs(residual) / error : std::numeric_limits<double>::infinity(); }
    bool passed(double factor = 3.0) const { return std::abs(residual) < factor * error; }
};

struct RelationsReport {
    int case_id = 1;
    std::vector<RelationCheck> checks;
    bool all_passed(double factor = 3.0) const {
        for (const auto& c : checks)
            if (!c.passed(factor)) return false;
        return true;
    }
};

// Energy-conservation relations between the coefficients (plus, in Case 1,
// their consequences r1 = t1 = l1 real; in Case 2, l1 = r1 = t1 = 0).
inline RelationsReport verify_relations(const ExpansionCoefficients& c) {
    RelationsReport rep;
    rep.case_id = c.case_id;
    const auto& e = c.err;
    const double r0 = c.r0_direct, t0 = c.t0;
    const double er0 = e.r0, et0 = e.t0;
    rep.checks.push_back({"unit: 1 = r0^2 + t0^2", 1.0 - r0 * r0 - t0 * t0, 2.0 * r0 * er0 + 2.0 * t0 * et0});
    if (c.case_id == 1) {
        const double l1 = c.l1.real();
        const double nr = std::norm(c.r1), nt = std::norm(c.t1);
        rep.checks.push_back({"k^2: l1^2 = r0^2|r1|^2 + t0^2|t1|^2", l1 * l1 - r0 * r0 * nr - t0 * t0 * nt,
                              2.0 * std::abs(c.l1) * e.l1 + 2.0 * r0 * nr * er0 + 2.0 * r0 * r0 * std::abs(c.r1) * e.r1 +
                                  2.0 * t0 * nt * et0 + 2.0 * t0 * t0 * std::abs(c.t1) * e.t1});
        rep.checks.push_back({"wk: l1 = r0^2 Re r1 + t0^2 Re t1", l1 - r0 * r0 * c.r1.real() - t0 * t0 * c.t1.real(),
                              e.l1 + 2.0 * r0 * std::abs(c.r1) * er0 + r0 * r0 * e.r1 + 2.0 * t0 * std::abs(c.t1) * et0 + t0 * t0 * e.t1});
        rep.checks.push_back({"r1 = l1", std::abs(c.r1 - c.l1), e.r1 + e.l1});
        rep.checks.push_back({"t1 = l1", std::abs(c.t1 - c.l1), e.t1 + e.l1});
        rep.checks.push_back({"Im l1 = 0", c.l1.imag(), e.l1});
        rep.checks.push_back({"Im r1 = 0", c.r1.imag(), e.r1});
        rep.checks.push_back({"Im t1 = 0", c.t1.imag(), e.t1});
    } else {
        rep.checks.push_back({"wk^2: Re l2 = r0^2 Re r2 + t0^2 Re t2", c.l2.real() - r0 * r0 * c.r2.real() - t0 * t0 * c.t2.real(),
                              e.l2 + 2.0 * r0 * std::abs(c.r2) * er0 + r0 * r0 * e.r2 + 2.0 * t0 * std::abs(c.t2) * et0 + t0 * t0 * e.t2});
        const double nl = std::norm(c.l2), nr = std::norm(c.r2), nt = std::norm(c.t2);
        rep.checks.push_back({"k^4: |l2|^2 = r0^2|r2|^2 + t0^2|t2|^2", nl - r0 * r0 * nr - t0 * t0 * nt,
                              2.0 * std::abs(c.l2) * e.l2 + 2.0 * r0 * nr * er0 + 2.0 * r0 * r0 * std::abs(c.r2) * e.r2 +
                                  2.0 * t0 * nt * et0 + 2.0 * t0 * t0 * std::abs(c.t2) * e.t2});
        rep.checks.push_back({"l1 = 0", std::abs(c.l1), e.l1});
        rep.checks.push_back({"r1 = 0", std::abs(c.r1), e.r1});
        rep.checks.push_back({"t1 = 0", std::abs(c.t1), e.t1});
    }
    return rep;
}

// r0^2 (Re r1)^2 + t0^2 (Re t1)^2 - (r0^2 Re r1 + t0^2 Re t1)^2 with r0^2 + t0^2 = 1:
// nonnegative by convexity, zero iff Re r1 = Re t1.
inline double convexity_gap(double r0, double t0, cplx r1, cplx t1) {
    const double m = r0 * r0 * r1.real() + t0 * t0 * t1.real();
    return r0 * r0 * r1.real() * r1.real() + t0 * t0 * t1.real() * t1.real() - m * m;
}

} // namespace slabfano
