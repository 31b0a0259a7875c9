#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hermite.hpp"
#include "params.hpp"
#include "profiles.hpp"

namespace blowup {

/// (d0, d1) data family. d1 has dim entries; radial runs (dim > 1) need d1 = 0.
struct InitialDataSpec {
    double d0 = 0.0;
    std::vector<double> d1{0.0};
    SimParams params;
    double blend_lo = 0.2;
    double blend_hi = 1.0;

    double t0() const { return params.t0(); }

    void validate() const {
        params.validate();
        if (static_cast<int>(d1.size()) != params.dim) throw ValidationError("d1 must have dim entries");
        if (params.dim > 1)
            for (double v : d1)
                if (v != 0.0) throw ValidationError("radial runs take d1 = 0");
        if (!(0.0 < blend_lo && blend_lo < blend_hi && blend_hi <= 1.0)) throw ValidationError("need 0 < blend_lo < blend_hi <= 1");
    }
};

/// 6t^5 - 15t^4 + 10t^3 clamped to [0, 1].
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

/// Inner log profile below blend_lo, -ln(1 + a x^2) above blend_hi.
inline double u_hat_star(double x_norm, const InitialDataSpec& spec) {
    if (!(x_norm > 0.0)) throw DomainError("u_hat_star is singular at x = 0");
    const double outer = -std::log1p(spec.params.a_far * x_norm * x_norm);
    if (x_norm >= spec.blend_hi) return outer;
    const double inner = final_profile(x_norm, spec.params.alpha);
    const double w = smoothstep5((x_norm - spec.blend_lo) / (spec.blend_hi - spec.blend_lo));
    if (w == 0.0) return inner;
    return (1.0 - w) * inner + w * outer;
}

/// chi0(|x| / (|ln(T - t0)| sqrt(T - t0)))
inline double chi_1(double x_norm, double t0, const SimParams& p) {
    const double th = p.T - t0;
    if (!(th > 0.0)) throw DomainError("chi_1 needs t0 < T");
    return chi0(x_norm / (std::abs(std::log(th)) * std::sqrt(th)));
}

namespace detail {

/// d1 . y in the dim = 1 case, 0 otherwise (radial d1 is zero).
inline double d1_dot(const InitialDataSpec& spec, double y) { return spec.params.dim == 1 ? spec.d1[0] * y : 0.0; }

inline double initial_u_at(double x, const InitialDataSpec& spec) {
    const SimParams& p = spec.params;
    const double s0 = p.s0, t0 = p.t0();
    const double ax = std::abs(x);
    const double c1 = chi_1(ax, t0, p);
    double u = 0.0;
    if (c1 < 1.0) u += u_hat_star(ax, spec) * (1.0 - c1);
    if (c1 > 0.0) {
        const double y = x * std::exp(0.5 * s0);
        const double arg = p.A / (s0 * s0) * (spec.d0 + d1_dot(spec, y)) * chi_cutoff(std::abs(16.0 * y), s0, p.K0) +
                           psi_alpha(std::abs(y), s0, p);
        if (!(arg > 0.0)) throw DomainError("initial data: nonpositive log argument at x = " + std::to_string(x));
        u += (s0 + std::log(arg)) * c1;
    }
    return u;
}

}  // namespace detail

/// U(x, t0) at the given nodes (radii in radial mode).
inline PhysicalField build_initial_U(const InitialDataSpec& spec, const std::vector<double>& x) {
    spec.validate();
    PhysicalField f;
    f.t = spec.t0();
    f.x = x;
    f.u.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f.u[i] = detail::initial_u_at(x[i], spec);
    return f;
}

/// W(y, s0) = U(y e^(-s0/2), t0) - s0 on a similarity grid.
inline SimilarityField build_initial_W(const InitialDataSpec& spec, const YGrid& g) {
    spec.validate();
    const double s0 = spec.params.s0, sq = std::exp(-0.5 * s0);
    SimilarityField f;
    f.s = s0;
    f.y = g.y;
    f.w.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f.w[i] = detail::initial_u_at(g.y[i] * sq, spec) - s0;
    return f;
}

/// Literal (A/s0^2)(d0 + d1.y) chi(16y, s0) e^(chi_1(x, t0)), x = y e^(-s0/2).
inline std::vector<double> build_initial_Q(const InitialDataSpec& spec, const YGrid& g) {
    spec.validate();
    const SimParams& p = spec.params;
    const double s0 = p.s0, sq = std::exp(-0.5 * s0), t0 = p.t0();
    std::vector<double> q(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        q[i] = p.A / (s0 * s0) * (spec.d0 + detail::d1_dot(spec, y)) * chi_cutoff(std::abs(16.0 * y), s0, p.K0) *
               std::exp(chi_1(std::abs(y) * sq, t0, p));
    }
    return q;
}

/// e^W - psi of build_initial_W: the exact transform of the physical data.
inline std::vector<double> initial_Q_transform(const InitialDataSpec& spec, const YGrid& g) {
    return q_from_w(build_initial_W(spec, g), spec.params);
}

/// Affine map (d0, d1) -> (Q0, Q1) at s0: offset at (0,0) and 2x2 linear part
/// (dim = 1; radial uses the (0,0) entry only).
struct ModeMap {
    std::array<double, 2> offset{};
    std::array<std::array<double, 2>, 2> M{};
    double condition = 0.0;  // ratio of singular values
};

inline ModeMap initial_mode_map(const InitialDataSpec& base, const RhoQuadrature& quad, bool literal) {
    auto modes = [&](double d0, double d1) {
        InitialDataSpec s = base;
        s.d0 = d0;
        s.d1.assign(base.params.dim, 0.0);
        if (base.params.dim == 1) s.d1[0] = d1;
        const auto q = literal ? build_initial_Q(s, quad.grid()) : initial_Q_transform(s, quad.grid());
        const ModeDecomposition md = decompose(quad, q, base.params.s0, base.params);
        return std::array<double, 2>{md.q0, md.q1[0]};
    };
    ModeMap m;
    m.offset = modes(0.0, 0.0);
    const auto e0 = modes(1.0, 0.0);
    const auto e1 = base.params.dim == 1 ? modes(0.0, 1.0) : m.offset;
    for (int r = 0; r < 2; ++r) {
        m.M[r][0] = e0[r] - m.offset[r];
        m.M[r][1] = e1[r] - m.offset[r];
    }
    // singular values of a 2x2 matrix
    const double a = m.M[0][0], b = m.M[0][1], c = m.M[1][0], d = m.M[1][1];
    const double s1 = a * a + b * b + c * c + d * d, det = std::abs(a * d - b * c);
    const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * det * det));
    const double smax = std::sqrt(0.5 * (s1 + disc)), smin = std::sqrt(std::max(0.0, 0.5 * (s1 - disc)));
    m.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    return m;
}

}  // namespace blowup
