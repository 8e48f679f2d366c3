#pragma once

// Discrete wave model: uniform square lattice with
//   omega^2 u = 4u - sum_{nbrs} u + V u
// and a periodic strip of on-site defects (period N in x). Pendant sites hang
// off defects, obey omega^2 w = mu w - g u_host, and are eliminated exactly
// into a frequency-dependent on-site term V_eff = d + sum g^2/(omega^2 - mu).

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace slabfano {

inline constexpr double wood_guard = 1e-9;
inline constexpr double pendant_pole_guard = 1e-12;

struct Defect {
    int x = 0;
    int z = 0;
    double d = 0.0;
};

struct Pendant {
    std::size_t host = 0;
    double mu = 0.0;
    double g = 0.0;
};

enum class ParamField { d, mu, g };

// Handle on one real parameter, written as "defects[i].d", "pendants[i].mu"
// or "pendants[i].g".
struct TunableRef {
    std::string path;
    ParamField field = ParamField::d;
    std::size_t index = 0;
};

inline TunableRef parse_tunable_path(const std::string& path) {
    static const std::regex re(R"(^\s*(defects|pendants)\[(\d+)\]\.(d|mu|g)\s*$)");
    std::smatch m;
    if (!std::regex_match(path, m, re)) throw ConfigError("tunable path '" + path + "' not of form defects[i].d or pendants[i].mu|g");
    TunableRef ref;
    ref.path = path;
    ref.index = std::stoul(m[2].str());
    const std::string kind = m[1].str();
    const std::string field = m[3].str();
    if (kind == "defects" && field != "d") throw ConfigError("tunable path '" + path + "': defects only carry d");
    if (kind == "pendants" && field == "d") throw ConfigError("tunable path '" + path + "': pendants carry mu or g");
    ref.field = field == "d" ? ParamField::d : field == "mu" ? ParamField::mu : ParamField::g;
    return ref;
}

struct LatticeConfig {
    int period = 1;
    std::vector<Defect> defects;
    std::vector<Pendant> pendants;
    std::optional<TunableRef> tunable;

    void validate() const {
        if (period < 1) throw ConfigError("period must be >= 1");
        if (defects.empty()) throw ConfigError("config needs at least one defect (pendants attach to defects)");
        std::set<std::pair<int, int>> seen;
        for (std::size_t i = 0; i < defects.size(); ++i) {
            const auto& df = defects[i];
            if (df.x < 0 || df.x >= period)
                throw ConfigError("defects[" + std::to_string(i) + "].x outside [0, period)");
            if (!std::isfinite(df.d)) throw ConfigError("defects[" + std::to_string(i) + "].d not finite");
            if (!seen.insert({df.x, df.z}).second)
                throw ConfigError("defects[" + std::to_string(i) + "] duplicates an occupied site");
        }
        for (std::size_t k = 0; k < pendants.size(); ++k) {
            const auto& pd = pendants[k];
            if (pd.host >= defects.size())
                throw ConfigError("pendants[" + std::to_string(k) + "].host is not a defect index");
            if (!std::isfinite(pd.mu) || !std::isfinite(pd.g))
                throw ConfigError("pendants[" + std::to_string(k) + "] has non-finite mu or g");
        }
        if (tunable) {
            const auto& t = *tunable;
            const std::size_t limit = t.field == ParamField::d ? defects.size() : pendants.size();
            if (t.index >= limit) throw ConfigError("tunable path '" + t.path + "' indexes past the end");
        }
    }

    double& parameter(const TunableRef& t) {
        if (t.field == ParamField::d) return defects.at(t.index).d;
        if (t.field == ParamField::mu) return pendants.at(t.index).mu;
        return pendants.at(t.index).g;
    }
    double parameter(const TunableRef& t) const { return const_cast<LatticeConfig&>(*this).parameter(t); }

    std::size_t size() const { return defects.size(); }
};

struct SpectralPoint {
    cplx kappa{0.0, 0.0};
    cplx omega{0.0, 0.0};

    bool is_real() const { return kappa.imag() == 0.0 && omega.imag() == 0.0; }
};

struct OrderData {
    int p = 0;
    cplx kappa_p;
    cplx eta;
    bool propagating = false;
    double branch_distance = 0.0; // min(|s|, |s-1|) with s = sin^2(eta/2)
};

struct OrderSpectrum {
    cplx kappa;
    cplx omega;
    std::vector<OrderData> orders;

    int propagating_count() const {
        return static_cast<int>(std::count_if(orders.begin(), orders.end(), [](const OrderData& o) { return o.propagating; }));
    }
    double min_branch_distance() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& o : orders) m = std::min(m, o.branch_distance);
        return m;
    }
};

// s = sin^2(eta/2) forced by the ambient dispersion relation.
inline cplx transverse_s(cplx kappa_p, cplx omega) {
    const cplx sk = std::sin(kappa_p / 2.0);
    return omega * omega / 4.0 - sk * sk;
}

inline cplx dispersion_residual(cplx kappa_p, cplx eta, cplx omega) {
    const cplx sk = std::sin(kappa_p / 2.0);
    const cplx se = std::sin(eta / 2.0);
    return 4.0 * sk * sk + 4.0 * se * se - omega * omega;
}

// z-wavenumber of one diffraction order. Propagating band (0 < Re s < 1): the
// principal arccos, real and positive for real inputs and analytically
// continued off the real axis (leaky roots live at Im omega < 0). Elsewhere
// the decaying root |e^{i eta}| < 1.
inline cplx order_wavenumber(cplx kappa_p, cplx omega) {
    const cplx s = transverse_s(kappa_p, omega);
    const cplx c = 1.0 - 2.0 * s;
    if (s.real() > 0.0 && s.real() < 1.0) return std::acos(c);
    const cplx root = std::sqrt(c * c - 1.0);
    cplx zeta = c - root;
    if (std::abs(zeta) > 1.0) zeta = c + root;
    return -I * std::log(zeta);
}

inline OrderSpectrum order_spectrum(const SpectralPoint& pt, int N) {
    OrderSpectrum out;
    out.kappa = pt.kappa;
    out.omega = pt.omega;
    out.orders.reserve(static_cast<std::size_t>(N));
    for (int p = 0; p < N; ++p) {
        OrderData o;
        o.p = p;
        o.kappa_p = pt.kappa + 2.0 * pi * p / static_cast<double>(N);
        o.eta = order_wavenumber(o.kappa_p, pt.omega);
        const cplx s = transverse_s(o.kappa_p, pt.omega);
        o.propagating = s.real() > 0.0 && s.real() < 1.0;
        o.branch_distance = std::min(std::abs(s), std::abs(s - 1.0));
        out.orders.push_back(o);
    }
    return out;
}

// Real-parameter classification with the Wood-anomaly guard.
inline OrderSpectrum propagating_orders(const SpectralPoint& pt, int N) {
    if (!pt.is_real()) throw RegimeError("propagating_orders needs real kappa and omega");
    auto spec = order_spectrum(pt, N);
    for (const auto& o : spec.orders)
        if (o.branch_distance < wood_guard)
            throw WoodAnomalyError("order " + std::to_string(o.p) + " within guard of its branch point", o.p);
    return spec;
}

// Quasi-periodic Green's function of the ambient lattice:
//   G(m,n) = (1/N) sum_p e^{i kappa_p m} e^{i eta_p |n|} / (2i sin eta_p),
// with (sum_nbrs - 4 + omega^2) G = quasi-periodic delta at the origin.
class GreensFunction {
public:
    GreensFunction(const SpectralPoint& pt, int N) : spec_(order_spectrum(pt, N)), N_(N) {
        for (const auto& o : spec_.orders) {
            if (o.branch_distance < wood_guard)
                throw WoodAnomalyError("order " + std::to_string(o.p) + " within guard of its branch point", o.p);
            weight_.push_back(1.0 / (2.0 * I * std::sin(o.eta) * static_cast<double>(N)));
        }
    }

    cplx operator()(long m, long n) const {
        const double an = static_cast<double>(n < 0 ? -n : n);
        const double md = static_cast<double>(m);
        cplx acc = 0.0;
        for (std::size_t p = 0; p < weight_.size(); ++p) {
            const auto& o = spec_.orders[p];
            acc += weight_[p] * std::exp(I * (o.kappa_p * md + o.eta * an));
        }
        return acc;
    }

    // Order-p amplitude prefactor 1/(2iN sin eta_p).
    cplx weight(int p) const { return weight_[static_cast<std::size_t>(p)]; }
    const OrderSpectrum& spectrum() const { return spec_; }
    int period() const { return N_; }

private:
    OrderSpectrum spec_;
    int N_;
    std::vector<cplx> weight_;
};

inline cplx greens_function(const SpectralPoint& pt, int N, long m, long n) { return GreensFunction(pt, N)(m, n); }

// The lattice operator (sum_nbrs - 4 + omega^2) applied to a field at (m, n).
template <class Field>
cplx lattice_operator(Field&& u, cplx omega, long m, long n) {
    return u(m + 1, n) + u(m - 1, n) + u(m, n + 1) + u(m, n - 1) + (omega * omega - 4.0) * u(m, n);
}

inline Eigen::VectorXcd effective_potential(cplx omega, const LatticeConfig& cfg) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(cfg.size()));
    for (std::size_t i = 0; i < cfg.size(); ++i) v(static_cast<Eigen::Index>(i)) = cfg.defects[i].d;
    const cplx w2 = omega * omega;
    for (std::size_t k = 0; k < cfg.pendants.size(); ++k) {
        const auto& pd = cfg.pendants[k];
        const cplx den = w2 - pd.mu;
        if (std::abs(den) < pendant_pole_guard)
            throw PendantPoleError("omega^2 at isolated resonance of pendants[" + std::to_string(k) + "]", k);
        v(static_cast<Eigen::Index>(pd.host)) += pd.g * pd.g / den;
    }
    return v;
}

inline Eigen::MatrixXcd green_matrix(const GreensFunction& G, const LatticeConfig& cfg) {
    const auto D = static_cast<Eigen::Index>(cfg.size());
    Eigen::MatrixXcd Gm(D, D);
    for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < D; ++j) {
            const auto& a = cfg.defects[static_cast<std::size_t>(i)];
            const auto& b = cfg.defects[static_cast<std::size_t>(j)];
            Gm(i, j) = G(a.x - b.x, a.z - b.z);
        }
    return Gm;
}

inline Eigen::MatrixXcd build_A(const GreensFunction& G, const LatticeConfig& cfg) {
    const Eigen::VectorXcd v = effective_potential(G.spectrum().omega, cfg);
    const auto D = static_cast<Eigen::Index>(cfg.size());
    return Eigen::MatrixXcd::Identity(D, D) - green_matrix(G, cfg) * v.asDiagonal();
}

inline Eigen::MatrixXcd build_A(const SpectralPoint& pt, const LatticeConfig& cfg) {
    return build_A(GreensFunction(pt, cfg.period), cfg);
}

// Unit-amplitude order-0 wave incident from below (z -> -inf), on the defects.
inline Eigen::VectorXcd incident_field(const GreensFunction& G, const LatticeConfig& cfg) {
    const cplx eta0 = G.spectrum().orders[0].eta;
    const cplx kappa = G.spectrum().kappa;
    Eigen::VectorXcd phi(static_cast<Eigen::Index>(cfg.size()));
    for (std::size_t j = 0; j < cfg.size(); ++j)
        phi(static_cast<Eigen::Index>(j)) = std::exp(I * (kappa * static_cast<double>(cfg.defects[j].x) + eta0 * static_cast<double>(cfg.defects[j].z)));
    return phi;
}

} // namespace slabfano
