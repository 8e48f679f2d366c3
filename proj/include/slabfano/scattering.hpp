#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "lattice.hpp"

namespace slabfano {

inline constexpr double max_condition_number = 1e12;

struct ScatteringSolution {
    Eigen::VectorXcd psi;         // total field on the defect sites
    Eigen::VectorXcd pendant_field;
    cplx R{0.0, 0.0};
    cplx T_amp{1.0, 0.0};
    cplx incident_amp{1.0, 0.0};
    double min_singular_value = 0.0;
    int propagating_orders = 1;
};

struct CoefficientTriple {
    cplx ell;
    cplx a; // ell * R
    cplx b; // ell * T_amp
};

struct EigenBranch {
    cplx ell;
    Eigen::VectorXcd v;
    double gap = std::numeric_limits<double>::infinity(); // distance to the next eigenvalue
    double overlap_margin = 1.0;                          // best minus runner-up overlap (anchored only)
};

// Order-0 amplitudes (down, up) radiated by the equivalent source s = V_eff psi.
inline std::pair<cplx, cplx> order0_amplitudes(const GreensFunction& G, const LatticeConfig& cfg, const Eigen::VectorXcd& source) {
    const cplx kappa = G.spectrum().kappa;
    const cplx eta0 = G.spectrum().orders[0].eta;
    cplx down = 0.0, up = 0.0;
    for (std::size_t j = 0; j < cfg.size(); ++j) {
        const double x = cfg.defects[j].x;
        const double z = cfg.defects[j].z;
        const cplx s = source(static_cast<Eigen::Index>(j));
        down += std::exp(I * (-kappa * x + eta0 * z)) * s;
        up += std::exp(I * (-kappa * x - eta0 * z)) * s;
    }
    return {G.weight(0) * down, G.weight(0) * up};
}

inline Eigen::VectorXcd pendant_amplitudes(cplx omega, const LatticeConfig& cfg, const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd w(static_cast<Eigen::Index>(cfg.pendants.size()));
    for (std::size_t k = 0; k < cfg.pendants.size(); ++k) {
        const auto& pd = cfg.pendants[k];
        w(static_cast<Eigen::Index>(k)) = -pd.g * psi(static_cast<Eigen::Index>(pd.host)) / (omega * omega - pd.mu);
    }
    return w;
}

namespace detail {

inline int check_far_field_regime(const SpectralPoint& pt, int N) {
    if (!pt.is_real()) return 1;
    const auto spec = propagating_orders(pt, N);
    const int count = spec.propagating_count();
    if (count == 0) throw RegimeError("no propagating order: far field undefined");
    if (!spec.orders[0].propagating) throw RegimeError("order 0 evanescent: far field undefined");
    return count;
}

inline ScatteringSolution finish_solution(const GreensFunction& G, const LatticeConfig& cfg, Eigen::VectorXcd psi, double smin, int count) {
    ScatteringSolution sol;
    const cplx omega = G.spectrum().omega;
    const Eigen::VectorXcd v = effective_potential(omega, cfg);
    const Eigen::VectorXcd source = v.cwiseProduct(psi);
    const auto [down, up] = order0_amplitudes(G, cfg, source);
    sol.R = down;
    sol.T_amp = 1.0 + up;
    sol.pendant_field = pendant_amplitudes(omega, cfg, psi);
    sol.psi = std::move(psi);
    sol.min_singular_value = smin;
    sol.propagating_orders = count;
    return sol;
}

} // namespace detail

// Solves A psi = phi for a unit order-0 wave incident from z -> -inf.
inline ScatteringSolution solve_scattering(const SpectralPoint& pt, const LatticeConfig& cfg) {
    const int count = detail::check_far_field_regime(pt, cfg.period);
    const GreensFunction G(pt, cfg.period);
    const Eigen::MatrixXcd A = build_A(G, cfg);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > max_condition_number)
        throw SingularSystemError("A(kappa, omega) near singular (resonance proximity)", smin);
    Eigen::VectorXcd psi = A.partialPivLu().solve(incident_field(G, cfg));
    return detail::finish_solution(G, cfg, std::move(psi), smin, count);
}

// Like solve_scattering, but at a singular A whose range still contains the
// incident wave (the guided-mode pair itself) it returns the minimum-norm
// solution instead of failing.
inline ScatteringSolution solve_scattering_consistent(const SpectralPoint& pt, const LatticeConfig& cfg) {
    try {
        return solve_scattering(pt, cfg);
    } catch (const SingularSystemError& err) {
        const int count = detail::check_far_field_regime(pt, cfg.period);
        const GreensFunction G(pt, cfg.period);
        const Eigen::MatrixXcd A = build_A(G, cfg);
        const Eigen::VectorXcd phi = incident_field(G, cfg);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod;
        cod.setThreshold(1e-9);
        cod.compute(A);
        Eigen::VectorXcd psi = cod.solve(phi);
        if ((A * psi - phi).norm() > 1e-6 * phi.norm()) throw;
        return detail::finish_solution(G, cfg, std::move(psi), err.smallest_singular_value, count);
    }
}

namespace detail {

struct Decomposition {
    Eigen::VectorXcd lambda;
    Eigen::MatrixXcd vectors;
    Eigen::Index chosen = 0;
    EigenBranch branch;
};

inline Decomposition decompose(const Eigen::MatrixXcd& A, const std::optional<Eigen::VectorXcd>& anchor) {
    Decomposition dec;
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigen decomposition of A failed");
    dec.lambda = es.eigenvalues();
    dec.vectors = es.eigenvectors();
    for (Eigen::Index i = 0; i < dec.vectors.cols(); ++i) dec.vectors.col(i).normalize();
    const Eigen::Index n = dec.lambda.size();
    Eigen::Index k = 0;
    double margin = 1.0;
    if (anchor) {
        const Eigen::VectorXcd a = anchor->normalized();
        double best = -1.0, second = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ov = std::abs(a.dot(dec.vectors.col(i)));
            if (ov > best) {
                second = std::max(second, best);
                best = ov;
                k = i;
            } else {
                second = std::max(second, ov);
            }
        }
        margin = best - second;
        if (n > 1 && margin < 0.5) throw BranchCollisionError("eigenvector overlap ambiguous; refine continuation step", margin);
    } else {
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs(dec.lambda(i)) < std::abs(dec.lambda(k))) k = i;
    }
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) gap = std::min(gap, std::abs(dec.lambda(i) - dec.lambda(k)));
    if (gap < 1e-8) throw BranchCollisionError("eigenvalue branch not simple (gap below 1e-8)", gap);
    dec.chosen = k;
    dec.branch = EigenBranch{dec.lambda(k), dec.vectors.col(k), gap, margin};
    return dec;
}

} // namespace detail

inline EigenBranch eigen_branch(const SpectralPoint& pt, const LatticeConfig& cfg,
                                const std::optional<Eigen::VectorXcd>& anchor = std::nullopt) {
    return detail::decompose(build_A(pt, cfg), anchor).branch;
}

// Smallest-modulus eigenvalue only; the dispersion solver's workhorse.
inline cplx ell_value(const SpectralPoint& pt, const LatticeConfig& cfg) {
    const Eigen::MatrixXcd A = build_A(pt, cfg);
    if (A.rows() == 1) return A(0, 0);
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
    const auto& lam = es.eigenvalues();
    Eigen::Index k = 0;
    for (Eigen::Index i = 1; i < lam.size(); ++i)
        if (std::abs(lam(i)) < std::abs(lam(k))) k = i;
    const cplx l = lam(k);
    if (!std::isfinite(l.real()) || !std::isfinite(l.imag())) throw ConvergenceError("non-finite eigenvalue of A");
    return l;
}

// (ell, a, b) with a = ell R and b = ell T_amp. Computed spectrally,
// ell A^{-1} = V diag(ell/lambda_i) V^{-1}, so the triple stays finite and
// analytic through the zero of ell.
inline CoefficientTriple coefficient_triple(const SpectralPoint& pt, const LatticeConfig& cfg,
                                            const std::optional<Eigen::VectorXcd>& anchor = std::nullopt) {
    const GreensFunction G(pt, cfg.period);
    const Eigen::MatrixXcd A = build_A(G, cfg);
    const auto dec = detail::decompose(A, anchor);
    const cplx ell = dec.branch.ell;
    Eigen::VectorXcd y = dec.vectors.partialPivLu().solve(incident_field(G, cfg));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (i != dec.chosen) y(i) *= ell / dec.lambda(i);
    const Eigen::VectorXcd psi_l = dec.vectors * y;
    const Eigen::VectorXcd source = effective_potential(pt.omega, cfg).cwiseProduct(psi_l);
    const auto [down, up] = order0_amplitudes(G, cfg, source);
    return {ell, down, ell + up};
}

// max over defect and pendant sites of |field| for unit incidence.
inline double field_enhancement(const SpectralPoint& pt, const LatticeConfig& cfg) {
    if (!pt.is_real()) throw RegimeError("field_enhancement needs real kappa and omega");
    const auto sol = solve_scattering_consistent(pt, cfg);
    double m = sol.psi.cwiseAbs().maxCoeff();
    if (sol.pendant_field.size() > 0) m = std::max(m, sol.pendant_field.cwiseAbs().maxCoeff());
    return m;
}

} // namespace slabfano
