#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace slabfano {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Endpoints hit exactly (t = 0.5 lands on the midpoint with no rounding drift).
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = 0.5 * (lo + hi);
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = lo * (1.0 - t) + hi * t;
    }
    return out;
}

struct ScalarMin {
    double x = 0.0;
    double value = 0.0;
};

// Golden-section search for a minimum of f on [a, b].
template <class F>
ScalarMin golden_section(F&& f, double a, double b, double xtol, int max_iter = 200) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < max_iter && std::abs(b - a) > xtol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? ScalarMin{c, fc} : ScalarMin{d, fd};
}

// Bracketed secant/bisection hybrid (regula falsi with Illinois damping).
template <class F>
double bracketed_root(F&& f, double a, double b, double xtol, int max_iter = 200) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw ConvergenceError("bracketed_root: no sign change on bracket");
    int side = 0;
    for (int it = 0; it < max_iter; ++it) {
        double c = (a * fb - b * fa) / (fb - fa);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        const double fc = f(c);
        if (fc == 0.0 || std::abs(b - a) < xtol) return c;
        if ((fc > 0) == (fb > 0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == +1) fb *= 0.5;
            side = +1;
        }
    }
    return 0.5 * (a + b);
}

// Taylor coefficients f^(k)(z0)/k! for k < count from M samples on a circle.
template <class F>
std::vector<cplx> cauchy_taylor(F&& f, cplx z0, double radius, std::size_t count, std::size_t M = 16) {
    std::vector<cplx> samples(M);
    for (std::size_t j = 0; j < M; ++j) {
        const double th = 2.0 * pi * static_cast<double>(j) / static_cast<double>(M);
        samples[j] = f(z0 + radius * std::polar(1.0, th));
    }
    std::vector<cplx> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
            const double th = 2.0 * pi * static_cast<double>(j * k) / static_cast<double>(M);
            acc += samples[j] * std::polar(1.0, -th);
        }
        out[k] = acc / (static_cast<double>(M) * std::pow(radius, static_cast<double>(k)));
    }
    return out;
}

// Least-squares fit y ~ sum_{k in powers} c_k x^k with complex data.
// Columns are scaled by the sample radius so the normal problem stays balanced.
struct PolyFit {
    std::vector<int> powers;
    std::vector<cplx> coeffs;
    double max_residual = 0.0;
};

inline PolyFit fit_powers(const std::vector<cplx>& x, const std::vector<cplx>& y, const std::vector<int>& powers) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto m = static_cast<Eigen::Index>(powers.size());
    double scale = 0.0;
    for (const auto& xi : x) scale = std::max(scale, std::abs(xi));
    if (scale == 0.0) scale = 1.0;
    Eigen::MatrixXcd V(n, m);
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx u = x[static_cast<std::size_t>(i)] / scale;
        for (Eigen::Index j = 0; j < m; ++j) V(i, j) = std::pow(u, powers[static_cast<std::size_t>(j)]);
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXcd c = V.colPivHouseholderQr().solve(rhs);
    PolyFit out;
    out.powers = powers;
    out.coeffs.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
        out.coeffs[static_cast<std::size_t>(j)] = c(j) / std::pow(scale, powers[static_cast<std::size_t>(j)]);
    out.max_residual = (V * c - rhs).cwiseAbs().maxCoeff();
    return out;
}

inline std::vector<int> power_range(int lo, int hi) {
    std::vector<int> p;
    for (int k = lo; k <= hi; ++k) p.push_back(k);
    return p;
}

// Slope of the least-squares line through (x_i, y_i).
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace slabfano
