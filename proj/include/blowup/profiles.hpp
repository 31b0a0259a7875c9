#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "params.hpp"

namespace blowup {

struct PhysicalField {
    std::vector<double> x;  // strictly increasing
    std::vector<double> u;
    double t = 0.0;
};

struct SimilarityField {
    std::vector<double> y;
    std::vector<double> w;
    double s = 0.0;
};

/// Rescaled window around an anchor x0 at one value of tau.
struct WindowField {
    double x0 = 0.0;
    double theta = 0.0;
    double tau = 0.0;
    std::vector<double> xi;
    std::vector<double> values;
    std::vector<double> grad;
    std::vector<double> hess;
};

inline double euclid_norm(std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

inline void require_alpha(double alpha) {
    if (!(alpha > -1.0)) throw DomainError("alpha must satisfy alpha > -1");
}

/// Phi_alpha(z) = -ln(1 + z^2/(4+4alpha))
inline double phi_alpha(double z_norm, double alpha) {
    require_alpha(alpha);
    return -std::log1p(z_norm * z_norm / (4.0 + 4.0 * alpha));
}

inline double phi_alpha_prime(double z, double alpha) {
    require_alpha(alpha);
    const double c = 1.0 / (4.0 + 4.0 * alpha);
    return -2.0 * c * z / (1.0 + c * z * z);
}

// psi = exp(b/s) / D,  b = N/(2+2a),  D = 1 + c r^2/s
inline double psi_alpha(double y_norm, double s, const SimParams& p) {
    if (!(s > 0.0)) throw DomainError("psi_alpha needs s > 0");
    const double b = p.dim / (2.0 + 2.0 * p.alpha);
    return std::exp(b / s + phi_alpha(y_norm / std::sqrt(s), p.alpha));
}

inline double psi_alpha(std::span<const double> y, double s, const SimParams& p) {
    return psi_alpha(euclid_norm(y), s, p);
}

/// Closed-form derivatives of psi in (r, s); lap is the N-dim Laplacian.
struct PsiJet {
    double value, ds, dr, lap;
};

inline PsiJet psi_jet(double r, double s, const SimParams& p) {
    const double c = p.c_profile();
    const double b = p.dim / (2.0 + 2.0 * p.alpha);
    const double D = 1.0 + c * r * r / s;
    const double psi = psi_alpha(r, s, p);
    PsiJet j;
    j.value = psi;
    j.ds = psi * (-b / (s * s) + (c * r * r / (s * s)) / D);
    j.dr = -psi * (2.0 * c * r / s) / D;
    j.lap = psi * (8.0 * c * c * r * r / (s * s * D * D) - 2.0 * c * p.dim / (s * D));
    return j;
}

/// y = (x - a)/sqrt(T - t), s = -ln(T - t), W = U + ln(T - t), node by node.
inline SimilarityField to_similarity(const PhysicalField& phys, const SimParams& p, double a = 0.0) {
    const double theta = p.T - phys.t;
    if (!(theta > 0.0)) throw DomainError("to_similarity needs t < T");
    const double sq = std::sqrt(theta), lt = std::log(theta);
    SimilarityField out;
    out.s = -lt;
    out.y.resize(phys.x.size());
    out.w.resize(phys.u.size());
    for (std::size_t i = 0; i < phys.x.size(); ++i) out.y[i] = (phys.x[i] - a) / sq;
    for (std::size_t i = 0; i < phys.u.size(); ++i) out.w[i] = phys.u[i] + lt;
    return out;
}

inline PhysicalField from_similarity(const SimilarityField& sim, const SimParams& p, double a = 0.0) {
    const double theta = std::exp(-sim.s);
    const double sq = std::sqrt(theta), lt = -sim.s;
    PhysicalField out;
    out.t = p.T - theta;
    out.x.resize(sim.y.size());
    out.u.resize(sim.w.size());
    for (std::size_t i = 0; i < sim.y.size(); ++i) out.x[i] = a + sim.y[i] * sq;
    for (std::size_t i = 0; i < sim.w.size(); ++i) out.u[i] = sim.w[i] - lt;
    return out;
}

/// Q = e^W - psi at each node. Nodes are radii when dim > 1.
inline std::vector<double> q_from_w(const SimilarityField& sim, const SimParams& p) {
    std::vector<double> q(sim.w.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = std::exp(sim.w[i]) - psi_alpha(std::abs(sim.y[i]), sim.s, p);
    return q;
}

/// Comparator in the window variables: -ln((1-tau) + (K0^2/16)/(4+4a)).
inline double hat_u(double tau, const SimParams& p) {
    return -std::log((1.0 - tau) + (p.K0 * p.K0 / 16.0) * p.c_profile());
}

struct TimeOfX {
    double t;
    double theta;
};

/// Solves |x| = (K0/4) sqrt(theta |ln theta|) for theta in (1e-300, 1/e).
inline TimeOfX t_of_x(double x_norm, const SimParams& p) {
    if (!(x_norm > 0.0)) throw DomainError("t_of_x needs |x| > 0");
    const double target = std::pow(4.0 * x_norm / p.K0, 2);
    auto g = [](double th) { return -th * std::log(th); };
    double lo = 1e-300, hi = std::exp(-1.0);
    if (target >= g(hi)) throw DomainError("t_of_x: |x| too large, theta would exceed 1/e");
    // geometric midpoints first, the bracket spans 300 decades
    while (hi - lo > 1e-12 * hi) {
        const double mid = (hi / lo > 4.0) ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
        if (g(mid) < target) lo = mid;
        else hi = mid;
    }
    const double theta = 0.5 * (lo + hi);
    return {p.T - theta, theta};
}

/// ln((8+8a)|ln x|/x^2), for 0 < x < 1.
inline double final_profile(double x_norm, double alpha) {
    require_alpha(alpha);
    if (!(x_norm > 0.0 && x_norm < 1.0)) throw DomainError("final_profile needs 0 < |x| < 1");
    return std::log((8.0 + 8.0 * alpha) * std::abs(std::log(x_norm)) / (x_norm * x_norm));
}

}  // namespace blowup
