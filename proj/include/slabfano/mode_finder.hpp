#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scattering.hpp"

namespace slabfano {

inline constexpr double root_tolerance = 1e-10;     // |ell| at an accepted root
inline constexpr double real_point_tolerance = 1e-9; // |Im omega| of a real point
inline constexpr double radiating_tolerance = 1e-8;

struct DispersionSample {
    double kappa = 0.0;
    cplx omega;
    double residual = 0.0; // |ell(kappa, omega)|
};

struct GuidedMode {
    double kappa0 = 0.0;
    double omega0 = 0.0;
    Eigen::VectorXcd nullvector;
    double radiating_component = 0.0;
    double ell_residual = 0.0;
    double im_omega = 0.0; // Im of the complex root the mode was read off
};

// Newton on f(omega) = 0 with a central-difference derivative.
// The first step has to reduce |f|; otherwise the guess is outside the basin.
template <class F>
cplx newton_omega(F&& f, cplx omega, double tol = root_tolerance, int max_iter = 50) {
    cplx fw = f(omega);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fw) < 1e-3 * tol) return omega;
        const double h = 1e-6 * (1.0 + std::abs(omega));
        const cplx df = (f(omega + h) - f(omega - h)) / (2.0 * h);
        if (df == 0.0 || !std::isfinite(std::abs(df))) throw ConvergenceError("newton_omega: vanishing derivative");
        const cplx step = fw / df;
        if (std::abs(step) > 0.5 * (1.0 + std::abs(omega))) throw ConvergenceError("newton_omega: step runs away from the guess");
        const cplx next = omega - step;
        const cplx fn = f(next);
        if (it == 0 && std::abs(fn) >= std::abs(fw) && std::abs(fw) >= tol)
            throw ConvergenceError("newton_omega: guess outside the basin (|f| not decreasing)");
        omega = next;
        fw = fn;
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(omega))) break;
    }
    if (!(std::abs(fw) < tol)) throw ConvergenceError("newton_omega: no convergence in " + std::to_string(max_iter) + " iterations");
    return omega;
}

// Complex root of ell(kappa, .) for complex kappa (no sign assertion).
inline cplx omega_root_complex(cplx kappa, cplx omega_guess, const LatticeConfig& cfg) {
    return newton_omega([&](cplx w) { return ell_value({kappa, w}, cfg); }, omega_guess);
}

// Self-adjointness allows roots with Im omega > 0 only on the imaginary axis
// (bound states with omega^2 < 0, below every band); those are reported as
// out of domain. Anything else in the upper half plane is a hard failure.
inline DispersionSample omega_root(double kappa, cplx omega_guess, const LatticeConfig& cfg) {
    const cplx w = omega_root_complex(kappa, omega_guess, cfg);
    if (w.imag() > real_point_tolerance) {
        if (std::abs(w.real()) < 1e-6 * std::abs(w)) throw RegimeError("root at omega^2 < 0 (bound state below the band)");
        throw SignViolationError("Im omega = " + std::to_string(w.imag()) + " > 0 at real kappa = " + std::to_string(kappa));
    }
    return {kappa, w, std::abs(ell_value({kappa, w}, cfg))};
}

// True when (kappa, Re omega) sits in the one-order regime away from Wood anomalies.
inline bool in_single_order_regime(double kappa, double omega, int N, double margin = 1e-6) {
    const auto spec = order_spectrum({kappa, omega}, N);
    return spec.orders[0].propagating && spec.propagating_count() == 1 && spec.min_branch_distance() > margin;
}

// Warm-started continuation along kappas; a failed step is subdivided.
inline std::vector<DispersionSample> trace_dispersion(const LatticeConfig& cfg, const std::vector<double>& kappas, cplx omega_start) {
    std::vector<DispersionSample> out;
    out.reserve(kappas.size());
    if (kappas.empty()) return out;
    out.push_back(omega_root(kappas[0], omega_start, cfg));
    std::function<DispersionSample(double, double, cplx, int)> step = [&](double k0, double k1, cplx w0, int depth) {
        try {
            return omega_root(k1, w0, cfg);
        } catch (const ConvergenceError&) {
            if (depth >= 8) throw;
        } catch (const BranchCollisionError&) {
            if (depth >= 8) throw;
        }
        const double km = 0.5 * (k0 + k1);
        const auto mid = step(k0, km, w0, depth + 1);
        return step(km, k1, mid.omega, depth + 1);
    };
    for (std::size_t i = 1; i < kappas.size(); ++i) {
        cplx guess = out.back().omega;
        if (out.size() >= 2) {
            const auto& a = out[out.size() - 2];
            const auto& b = out.back();
            const double dk = b.kappa - a.kappa;
            if (dk != 0.0) guess = b.omega + (b.omega - a.omega) * ((kappas[i] - b.kappa) / dk);
        }
        try {
            out.push_back(omega_root(kappas[i], guess, cfg));
        } catch (const ConvergenceError&) {
            out.push_back(step(out.back().kappa, kappas[i], out.back().omega, 1));
        }
    }
    return out;
}

struct BranchMinimum {
    double kappa = 0.0;
    cplx omega;
    double loss = std::numeric_limits<double>::infinity(); // |Im omega|
};

struct ScanOptions {
    std::size_t kappa_points = 201;
    std::size_t omega_points = 400;
};

namespace detail {

// Complex roots at kappa whose real part lies in the window, seeded from local
// minima of |ell| along the real omega axis.
inline std::vector<cplx> seed_roots(const LatticeConfig& cfg, double kappa, double wlo, double whi, std::size_t npts) {
    const auto grid = linspace(wlo, whi, npts);
    std::vector<double> mag(grid.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            mag[i] = std::abs(ell_value({kappa, grid[i]}, cfg));
        } catch (const NumericalError&) {
        }
    }
    std::vector<cplx> roots;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (!(mag[i] <= mag[i - 1] && mag[i] <= mag[i + 1])) continue;
        try {
            const auto s = omega_root(kappa, grid[i], cfg);
            if (s.omega.real() < wlo || s.omega.real() > whi) continue;
            if (!in_single_order_regime(kappa, s.omega.real(), cfg.period)) continue;
            const bool dup = std::any_of(roots.begin(), roots.end(), [&](cplx r) { return std::abs(r - s.omega) < 1e-7; });
            if (!dup) roots.push_back(s.omega);
        } catch (const ConvergenceError&) {
        } catch (const BranchCollisionError&) {
        } catch (const WoodAnomalyError&) {
        } catch (const PendantPoleError&) {
        } catch (const RegimeError&) {
        }
    }
    return roots;
}

// Traces from the centre outwards, stopping where the branch leaves the regime.
inline std::vector<DispersionSample> trace_branch(const LatticeConfig& cfg, const std::vector<double>& grid, std::size_t centre, cplx w) {
    std::vector<DispersionSample> left, right;
    auto walk = [&](long dir, std::vector<DispersionSample>& acc) {
        cplx prev = w, prev2 = w;
        double kprev = grid[centre], kprev2 = grid[centre];
        for (long i = static_cast<long>(centre) + dir; i >= 0 && i < static_cast<long>(grid.size()); i += dir) {
            const double k = grid[static_cast<std::size_t>(i)];
            cplx guess = prev;
            if (kprev != kprev2) guess = prev + (prev - prev2) * ((k - kprev) / (kprev - kprev2));
            DispersionSample s;
            try {
                try {
                    s = omega_root(k, guess, cfg);
                } catch (const ConvergenceError&) {
                    s = trace_dispersion(cfg, {kprev, k}, prev).back();
                }
            } catch (const WoodAnomalyError&) {
                break;
            } catch (const PendantPoleError&) {
                break;
            }
            if (!in_single_order_regime(k, s.omega.real(), cfg.period)) break;
            acc.push_back(s);
            prev2 = prev;
            kprev2 = kprev;
            prev = s.omega;
            kprev = k;
        }
    };
    walk(-1, left);
    walk(+1, right);
    std::vector<DispersionSample> out(left.rbegin(), left.rend());
    out.push_back({grid[centre], w, std::abs(ell_value({grid[centre], w}, cfg))});
    out.insert(out.end(), right.begin(), right.end());
    return out;
}

inline BranchMinimum refine_minimum(const LatticeConfig& cfg, const std::vector<DispersionSample>& branch, std::size_t i) {
    BranchMinimum best{branch[i].kappa, branch[i].omega, std::abs(branch[i].omega.imag())};
    const double klo = branch[i > 0 ? i - 1 : i].kappa;
    const double khi = branch[i + 1 < branch.size() ? i + 1 : i].kappa;
    if (klo == khi) return best;
    const cplx w0 = branch[i].omega;
    auto root_at = [&](double k) { return omega_root(k, w0, cfg).omega; };
    auto consider = [&](double k) {
        try {
            const cplx w = root_at(k);
            if (std::abs(w.imag()) < best.loss) best = {k, w, std::abs(w.imag())};
        } catch (const SignViolationError&) {
            throw;
        } catch (const NumericalError&) {
        }
    };
    // Reciprocity makes omega even in kappa, so kappa = 0 is always stationary.
    if (klo <= 0.0 && khi >= 0.0) {
        try {
            const cplx w = root_at(0.0);
            if (std::abs(w.imag()) < 1e-12) return {0.0, w, std::abs(w.imag())};
        } catch (const SignViolationError&) {
            throw;
        } catch (const NumericalError&) {
        }
    }
    try {
        const auto g = golden_section([&](double k) { return std::abs(root_at(k).imag()); }, klo, khi, 1e-13);
        consider(g.x);
        // Polish on the sign change of d(Im omega)/dkappa, which is linear at the minimum.
        const double h = 1e-4 * (khi - klo);
        auto slope = [&](double k) { return (root_at(k + h).imag() - root_at(k - h).imag()) / (2.0 * h); };
        const double span = std::max(1e-6, 0.05 * (khi - klo));
        const double a = std::max(klo, g.x - span);
        const double b = std::min(khi, g.x + span);
        if ((slope(a) > 0) != (slope(b) > 0)) consider(bracketed_root(slope, a, b, 1e-15));
    } catch (const SignViolationError&) {
        throw;
    } catch (const NumericalError&) {
    }
    return best;
}

} // namespace detail

// Sharpens a real point beyond what minimising |Im omega| can resolve (Im
// omega is quadratic there): the local expansion omega(kappa) from a Cauchy
// circle gives the stationary point of Im omega on the real axis directly.
inline BranchMinimum polish_real_point(const LatticeConfig& cfg, BranchMinimum bm, double radius = 1e-3, int iters = 3) {
    if (bm.kappa == 0.0) return bm; // stationary by reciprocity
    constexpr std::size_t M = 8;
    for (int it = 0; it < iters; ++it) {
        std::vector<cplx> roots(M);
        try {
            for (std::size_t m = 0; m < M; ++m) {
                const cplx k = bm.kappa + std::polar(radius, 2.0 * pi * static_cast<double>(m) / M);
                roots[m] = omega_root_complex(k, bm.omega, cfg);
            }
        } catch (const ConvergenceError&) {
            return bm;
        }
        cplx p1 = 0.0, p2 = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double th = 2.0 * pi * static_cast<double>(m) / M;
            p1 += roots[m] * std::polar(1.0, -th);
            p2 += roots[m] * std::polar(1.0, -2.0 * th);
        }
        p1 /= static_cast<double>(M) * radius;
        p2 /= static_cast<double>(M) * radius * radius;
        if (p2.imag() == 0.0) return bm;
        const double shift = -p1.imag() / (2.0 * p2.imag());
        if (!(std::abs(shift) < radius)) return bm;
        const double k_new = bm.kappa + shift;
        const cplx w_new = omega_root(k_new, bm.omega, cfg).omega;
        bm = {k_new, w_new, std::abs(w_new.imag())};
        if (std::abs(shift) < 1e-15) break;
    }
    return bm;
}

// Minimum of |Im omega| over all traced branches in the window.
inline BranchMinimum scan_branch_minimum(const LatticeConfig& cfg, double klo, double khi, double wlo, double whi,
                                         const ScanOptions& opt = {}) {
    const auto grid = linspace(klo, khi, opt.kappa_points);
    const std::size_t centre = grid.size() / 2;
    BranchMinimum best;
    for (const cplx w : detail::seed_roots(cfg, grid[centre], wlo, whi, opt.omega_points)) {
        const auto branch = detail::trace_branch(cfg, grid, centre, w);
        std::size_t imin = 0;
        for (std::size_t i = 1; i < branch.size(); ++i)
            if (std::abs(branch[i].omega.imag()) < std::abs(branch[imin].omega.imag())) imin = i;
        const auto r = detail::refine_minimum(cfg, branch, imin);
        if (r.loss < best.loss) best = r;
    }
    return best;
}

// Mode record at a real (kappa0, omega0): null vector of A and its order-0
// radiation (zero for a true guided mode).
inline GuidedMode make_mode(const LatticeConfig& cfg, double kappa0, cplx omega_root_value) {
    GuidedMode m;
    m.kappa0 = kappa0;
    m.omega0 = omega_root_value.real();
    m.im_omega = omega_root_value.imag();
    const SpectralPoint pt{kappa0, m.omega0};
    const GreensFunction G(pt, cfg.period);
    const auto br = eigen_branch(pt, cfg);
    m.nullvector = br.v;
    m.ell_residual = std::abs(br.ell);
    const Eigen::VectorXcd src = effective_potential(pt.omega, cfg).cwiseProduct(br.v);
    const auto [down, up] = order0_amplitudes(G, cfg, src);
    m.radiating_component = std::max(std::abs(down), std::abs(up));
    return m;
}

inline std::optional<GuidedMode> find_real_mode(const LatticeConfig& cfg, double klo, double khi, double wlo, double whi,
                                                const ScanOptions& opt = {}) {
    const auto best = scan_branch_minimum(cfg, klo, khi, wlo, whi, opt);
    if (!(best.loss < real_point_tolerance)) return std::nullopt;
    const auto sharp = polish_real_point(cfg, best);
    return make_mode(cfg, sharp.kappa, sharp.omega);
}

struct TuneOptions {
    double lo = 0.0;
    double hi = 1.0;
    double xtol = 1e-12;
    ScanOptions scan;
};

struct TuneResult {
    LatticeConfig config;
    GuidedMode mode;
    double parameter = 0.0;
    double loss = 0.0;
    int evaluations = 0;
};

// Drives min_kappa |Im omega(kappa; s)| to zero over the tunable parameter s.
// The loss touches zero quadratically without changing sign, so this is a
// bracketed minimisation rather than a root solve.
inline TuneResult tune_structure(const LatticeConfig& seed, double klo, double khi, double wlo, double whi, const TuneOptions& opt) {
    if (!seed.tunable) throw ConfigError("tune_structure: config has no tunable parameter");
    const auto ref = *seed.tunable;
    LatticeConfig work = seed;
    int evals = 0;
    auto loss = [&](double s) {
        ++evals;
        work.parameter(ref) = s;
        try {
            return scan_branch_minimum(work, klo, khi, wlo, whi, opt.scan).loss;
        } catch (const SignViolationError&) {
            throw;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double s = seed.parameter(ref);
    double l = loss(s);
    if (!(l < real_point_tolerance)) {
        const auto g = golden_section(loss, opt.lo, opt.hi, opt.xtol);
        s = g.x;
        l = loss(s);
        // Golden section stalls where the quadratic loss meets round-off
        // (|s - s*| ~ 1e-8). A cubic through five samples a safe distance
        // away locates the stationary point far more sharply.
        const double h = 1e-4 * std::max(1.0, std::abs(s));
        std::vector<cplx> xs, ys;
        for (int j = -2; j <= 2; ++j) {
            xs.push_back(j * h);
            ys.push_back(j == 0 ? l : loss(s + j * h));
        }
        const auto fit = fit_powers(xs, ys, power_range(0, 3));
        const double b1 = fit.coeffs[1].real(), c2 = fit.coeffs[2].real(), d3 = fit.coeffs[3].real();
        double x = c2 > 0.0 ? -b1 / (2.0 * c2) : 0.0;
        for (int it = 0; it < 5 && c2 > 0.0; ++it) x -= (b1 + 2.0 * c2 * x + 3.0 * d3 * x * x) / (2.0 * c2 + 6.0 * d3 * x);
        if (std::abs(x) < h) {
            const double lv = loss(s + x);
            if (lv <= std::max(l, 1e-15)) s += x, l = lv;
        }
    }
    if (!(l < real_point_tolerance))
        throw ConvergenceError("tune_structure: min |Im omega| = " + std::to_string(l) + " does not reach zero on [" +
                               std::to_string(opt.lo) + ", " + std::to_string(opt.hi) + "]");
    work.parameter(ref) = s;
    auto mode = find_real_mode(work, klo, khi, wlo, whi, opt.scan);
    if (!mode) throw ConvergenceError("tune_structure: tuned config lost its real point");
    return {work, *mode, s, l, evals};
}

// Null field of a mode anywhere on the lattice.
inline cplx null_field(const GuidedMode& mode, const LatticeConfig& cfg, long m, long n) {
    const GreensFunction G({mode.kappa0, mode.omega0}, cfg.period);
    const Eigen::VectorXcd src = effective_potential(mode.omega0, cfg).cwiseProduct(mode.nullvector);
    cplx u = 0.0;
    for (std::size_t j = 0; j < cfg.size(); ++j) u += G(m - cfg.defects[j].x, n - cfg.defects[j].z) * src(static_cast<Eigen::Index>(j));
    return u;
}

struct ModeReport {
    double ell_residual = 0.0;
    double im_omega = 0.0;
    double radiating_component = 0.0;
    double decay_measured = 0.0;
    double decay_expected = 0.0;
    double decay_relative_error = 0.0;
    bool ell_ok = false;
    bool im_ok = false;
    bool radiating_ok = false;
    bool decay_ok = false;
    std::string failing; // first failing metric, empty when verified

    bool verified() const { return failing.empty(); }
};

inline ModeReport verify_mode(const GuidedMode& mode, const LatticeConfig& cfg) {
    ModeReport rep;
    const SpectralPoint pt{mode.kappa0, mode.omega0};
    const auto br = eigen_branch(pt, cfg);
    rep.ell_residual = std::abs(br.ell);
    try {
        rep.im_omega = std::abs(omega_root(mode.kappa0, mode.omega0, cfg).omega.imag());
    } catch (const NumericalError&) {
        rep.im_omega = std::numeric_limits<double>::infinity();
    }
    const auto fresh = make_mode(cfg, mode.kappa0, mode.omega0);
    rep.radiating_component = fresh.radiating_component;

    // Slowest evanescent rate, compared with the fitted decay above the slab.
    rep.decay_expected = std::numeric_limits<double>::infinity();
    for (const auto& o : order_spectrum(pt, cfg.period).orders)
        if (!o.propagating) rep.decay_expected = std::min(rep.decay_expected, o.eta.imag());
    int ztop = cfg.defects.front().z;
    for (const auto& d : cfg.defects) ztop = std::max(ztop, d.z);
    std::vector<double> ns, logs;
    for (int dn = 5; dn <= 20; ++dn) {
        double amp = 0.0;
        for (int m = 0; m < cfg.period; ++m) amp = std::max(amp, std::abs(null_field(fresh, cfg, m, ztop + dn)));
        ns.push_back(dn);
        logs.push_back(std::log(std::max(amp, 1e-300)));
    }
    rep.decay_measured = -ls_slope(ns, logs);
    rep.decay_relative_error = std::abs(rep.decay_measured - rep.decay_expected) / rep.decay_expected;

    rep.ell_ok = rep.ell_residual < root_tolerance;
    rep.im_ok = rep.im_omega < real_point_tolerance;
    rep.radiating_ok = rep.radiating_component < radiating_tolerance;
    rep.decay_ok = std::isfinite(rep.decay_expected) && rep.decay_relative_error < 0.1;
    if (!rep.ell_ok) rep.failing = "ell_residual";
    else if (!rep.im_ok) rep.failing = "im_omega";
    else if (!rep.radiating_ok) rep.failing = "radiating_component";
    else if (!rep.decay_ok) rep.failing = "decay_rate";
    return rep;
}

} // namespace slabfano
