#pragma once

#include <array>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "params.hpp"
#include "profiles.hpp"

namespace blowup {

struct ModeTrajectory {
    std::vector<double> s, w0, w2;
    bool diverged = false;
    double diverged_at = std::numeric_limits<double>::quiet_NaN();
};

/// (W0', W2') with the cubic remainder dropped.
inline std::pair<double, double> rhs_w0w2(double w0, double w2, const SimParams& p) {
    const double N = p.dim, a = p.alpha;
    return {w0 + 0.5 * w0 * w0 + N * (4.0 + 8.0 * a) * w2 * w2, w0 * w2 + (4.0 + 4.0 * a) * w2 * w2};
}

namespace detail {
using State2 = std::array<double, 2>;

inline auto w0w2_system(const SimParams& p) {
    return [p](const State2& x, State2& dx, double) {
        auto [a, b] = rhs_w0w2(x[0], x[1], p);
        dx[0] = a;
        dx[1] = b;
    };
}
}  // namespace detail

/// Dormand-Prince 5(4), every accepted step recorded. Stops with diverged
/// set once |W0| or |W2| passes div_level.
inline ModeTrajectory integrate_modes(double w0_init, double w2_init, double s0, double s_end, const SimParams& p,
                                      double rtol = 1e-10, double div_level = 1e3) {
    namespace ode = boost::numeric::odeint;
    if (!(s0 >= 1.0)) throw DomainError("integrate_modes needs s0 >= 1");
    if (!(s_end > s0)) throw DomainError("integrate_modes needs s_end > s0");
    ModeTrajectory tr;
    detail::State2 x{w0_init, w2_init};
    auto sys = detail::w0w2_system(p);
    auto stepper = ode::make_controlled(rtol * 1e-4, rtol, ode::runge_kutta_dopri5<detail::State2>());
    double s = s0, ds = 1e-3;
    tr.s.push_back(s);
    tr.w0.push_back(x[0]);
    tr.w2.push_back(x[1]);
    while (s < s_end) {
        ds = std::min(ds, s_end - s);
        if (stepper.try_step(sys, x, s, ds) != ode::success) continue;
        tr.s.push_back(s);
        tr.w0.push_back(x[0]);
        tr.w2.push_back(x[1]);
        if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) > div_level || std::abs(x[1]) > div_level) {
            tr.diverged = true;
            tr.diverged_at = s;
            break;
        }
    }
    return tr;
}

/// The solution that stays bounded: W0 is unstable forward, so integrate
/// backward from s_end (W0 seeded on its quasi-static value) and solve for
/// W2(s_end) so that W2(s0) = w2_init.
inline ModeTrajectory integrate_modes_bounded(double w2_init, double s0, double s_end, const SimParams& p,
                                              double rtol = 1e-10) {
    namespace ode = boost::numeric::odeint;
    if (!(w2_init < 0.0)) throw DomainError("integrate_modes_bounded needs w2_init < 0");
    auto sys = detail::w0w2_system(p);
    const double N = p.dim, a = p.alpha;
    auto backward = [&](double kappa, ModeTrajectory* out) {
        detail::State2 x{-N * (4.0 + 8.0 * a) * kappa * kappa, kappa};
        auto stepper = ode::make_controlled(rtol * 1e-4, rtol, ode::runge_kutta_dopri5<detail::State2>());
        double s = s_end, ds = -1e-3;
        std::vector<double> ss{s}, w0{x[0]}, w2{x[1]};
        while (s > s0) {
            ds = std::max(ds, s0 - s);
            if (stepper.try_step(sys, x, s, ds) != ode::success) continue;
            if (!std::isfinite(x[1]) || x[1] < -1e3) return -1e3;
            if (out) {
                ss.push_back(s);
                w0.push_back(x[0]);
                w2.push_back(x[1]);
            }
        }
        if (out) {
            out->s.assign(ss.rbegin(), ss.rend());
            out->w0.assign(w0.rbegin(), w0.rend());
            out->w2.assign(w2.rbegin(), w2.rend());
        }
        return x[1];
    };
    // W2(s0) increases with kappa; bracket between 0 and a value past the target
    const double c4 = 4.0 + 4.0 * a;
    double lo = -10.0 / (c4 * s_end), hi = -1e-12;
    while (backward(lo, nullptr) > w2_init) lo *= 2.0;
    boost::uintmax_t iters = 200;
    auto res = boost::math::tools::toms748_solve([&](double k) { return backward(k, nullptr) - w2_init; }, lo, hi,
                                                 boost::math::tools::eps_tolerance<double>(50), iters);
    ModeTrajectory tr;
    backward(0.5 * (res.first + res.second), &tr);
    return tr;
}

struct W1Profile {
    std::vector<double> z, w1, dw1;
    double max_residual = 0.0;
};

/// Residual of the w1 profile equation at z > 0.
inline double w1_residual(double z, double w1, double dw1, const SimParams& p) {
    const double c = p.c_profile(), N = p.dim;
    const double D = 1.0 + c * z * z;
    const double w0p = -2.0 * c * z / D;
    const double w0pp = -2.0 * c * (1.0 - c * z * z) / (D * D);
    const double lap = w0pp + (N - 1.0) * w0p / z;
    return 0.5 * z * dw1 - w1 / D - 0.5 * z * w0p - lap - p.alpha * w0p * w0p;
}

/// w1 on [0, z_max]. w1(0) = N/(2+2a) is forced by regularity; writing
/// w1 = w1(0) + z^2 v gives the regular equation v' = -2cz (v + c/D)/D,
/// D = 1 + c z^2. v(0) (the free homogeneous part z^2/D) defaults to 0.
inline W1Profile solve_w1_radial(double z_max, const SimParams& p, std::size_t n_nodes = 2001, double v_at_0 = 0.0) {
    namespace ode = boost::numeric::odeint;
    if (!(z_max > 0.0)) throw DomainError("solve_w1_radial needs z_max > 0");
    const double c = p.c_profile();
    const double w1_0 = p.dim / (2.0 + 2.0 * p.alpha);
    auto rhs = [c](double v, double z) {
        const double D = 1.0 + c * z * z;
        return -2.0 * c * z * (v + c / D) / D;
    };
    using S1 = std::array<double, 1>;
    auto sys = [&](const S1& v, S1& dv, double z) { dv[0] = rhs(v[0], z); };
    W1Profile out;
    S1 v{v_at_0};
    auto stepper = ode::make_dense_output(1e-15, 1e-13, ode::runge_kutta_dopri5<S1>());
    std::vector<double> zs(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) zs[k] = z_max * static_cast<double>(k) / static_cast<double>(n_nodes - 1);
    std::vector<double> vs;
    ode::integrate_times(stepper, sys, v, zs.begin(), zs.end(), 1e-3, [&](const S1& x, double) { vs.push_back(x[0]); });
    for (std::size_t k = 0; k < n_nodes; ++k) {
        const double z = zs[k];
        const double w1 = w1_0 + z * z * vs[k];
        const double dw1 = 2.0 * z * vs[k] + z * z * rhs(vs[k], z);
        out.z.push_back(z);
        out.w1.push_back(w1);
        out.dw1.push_back(dw1);
        if (z > 0.0) out.max_residual = std::max(out.max_residual, std::abs(w1_residual(z, w1, dw1, p)));
    }
    return out;
}

/// Snapshot of the low modes used by the mode-ODE check (N = 1 or radial).
struct ModeSample {
    double s, q0, q1, q2;
};

struct ModeOdeReport {
    std::vector<double> s, r0, r1, r2;  // per interior snapshot
    double sup_r0 = 0.0, sup_r1 = 0.0, sup_r2 = 0.0;
};

/// s^2|Q0' - Q0|, s^2|Q1' - Q1/2|, s^3|Q2' + 2Q2/s|/A with centered
/// differences on a possibly nonuniform snapshot grid.
inline ModeOdeReport check_mode_odes(const std::vector<ModeSample>& m, const SimParams& p) {
    if (m.size() < 3) throw DomainError("check_mode_odes needs at least 3 snapshots");
    ModeOdeReport rep;
    for (std::size_t k = 1; k + 1 < m.size(); ++k) {
        const double hm = m[k].s - m[k - 1].s, hp = m[k + 1].s - m[k].s;
        auto d = [&](auto get) {
            return (hm * hm * get(m[k + 1]) - hp * hp * get(m[k - 1]) + (hp * hp - hm * hm) * get(m[k])) /
                   (hm * hp * (hm + hp));
        };
        const double s = m[k].s;
        const double d0 = d([](const ModeSample& x) { return x.q0; });
        const double d1 = d([](const ModeSample& x) { return x.q1; });
        const double d2 = d([](const ModeSample& x) { return x.q2; });
        rep.s.push_back(s);
        rep.r0.push_back(s * s * std::abs(d0 - m[k].q0));
        rep.r1.push_back(s * s * std::abs(d1 - 0.5 * m[k].q1));
        rep.r2.push_back(s * s * s * std::abs(d2 + 2.0 * m[k].q2 / s) / p.A);
        rep.sup_r0 = std::max(rep.sup_r0, rep.r0.back());
        rep.sup_r1 = std::max(rep.sup_r1, rep.r1.back());
        rep.sup_r2 = std::max(rep.sup_r2, rep.r2.back());
    }
    return rep;
}

/// Least-squares slope of ln(v) against ln(s); nonpositive entries skipped.
inline double loglog_slope(const std::vector<double>& s, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(v[i] > 0.0) || !(s[i] > 0.0)) continue;
        const double x = std::log(s[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace blowup
