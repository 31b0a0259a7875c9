#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hermite.hpp"
#include "params.hpp"
#include "phys_solver.hpp"
#include "profiles.hpp"

namespace blowup {

/// Listed in check order; first_violation follows it.
enum class Constraint { Q0, Q1, Q2, Qminus, gradQperp, Qe, D2_value, D2_grad, D2_hess, D3_value, D3_grad };

inline const char* to_string(Constraint c) {
    static const char* names[] = {"Q0", "Q1", "Q2", "Qminus", "gradQperp", "Qe", "D2_value", "D2_grad", "D2_hess", "D3_value", "D3_grad"};
    return names[static_cast<int>(c)];
}

inline std::optional<Constraint> constraint_from_string(const std::string& s) {
    for (int k = 0; k <= static_cast<int>(Constraint::D3_grad); ++k)
        if (s == to_string(static_cast<Constraint>(k))) return static_cast<Constraint>(k);
    return std::nullopt;
}

/// Signed slack per constraint (positive = satisfied).
struct TrapReport {
    bool in_set = true;
    std::optional<Constraint> first_violation;
    std::map<Constraint, double> margins;

    void finalize() {
        in_set = true;
        first_violation.reset();
        for (const auto& [c, m] : margins)
            if (m < 0.0) {
                in_set = false;
                if (!first_violation) first_violation = c;
            }
    }

    /// Union of two partial reports.
    TrapReport& merge(const TrapReport& other) {
        for (const auto& [c, m] : other.margins) margins[c] = m;
        finalize();
        return *this;
    }

    double margin(Constraint c) const { return margins.at(c); }
};

/// Weighted sup of |f|/(1+|y|^3) over nodes with |y| <= 2 K0 sqrt(s).
inline double weighted_sup(const YGrid& g, const std::vector<double>& f, double s, const SimParams& p) {
    const double inner = 2.0 * p.K0 * std::sqrt(s);
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = std::abs(g.y[i]);
        if (r <= inner) m = std::max(m, std::abs(f[i]) / (1.0 + r * r * r));
    }
    return m;
}

/// The six spectral bounds on Q at time s.
inline TrapReport check_D1(const ModeDecomposition& md, const YGrid& g, double s, const SimParams& p) {
    if (!(s >= std::exp(1.0))) throw DomainError("check_D1 needs s >= e");
    const double b = p.A / (s * s);
    TrapReport r;
    r.margins[Constraint::Q0] = b - std::abs(md.q0);
    double q1 = 0.0, q2 = 0.0;
    for (double v : md.q1) q1 = std::max(q1, std::abs(v));
    for (double v : md.q2) q2 = std::max(q2, std::abs(v));
    r.margins[Constraint::Q1] = b - q1;
    r.margins[Constraint::Q2] = p.A * p.A * std::log(s) / (s * s) - q2;
    r.margins[Constraint::Qminus] = b - weighted_sup(g, md.q_minus, s, p);
    r.margins[Constraint::gradQperp] = b - (md.grad_q_perp.empty() ? 0.0 : weighted_sup(g, md.grad_q_perp, s, p));
    double qe = 0.0;
    for (double v : md.q_e) qe = std::max(qe, std::abs(v));
    r.margins[Constraint::Qe] = p.A * p.A / std::sqrt(s) - qe;
    r.finalize();
    return r;
}

/// Box [-A/s^2, A/s^2]^(N+1); margins per component (q0 first).
struct BoxTest {
    bool inside = true;
    std::vector<double> margins;
};

inline BoxTest in_hat_VA(double q0, const std::vector<double>& q1, double s, double A) {
    if (!(s > 0.0)) throw DomainError("in_hat_VA needs s > 0");
    const double b = A / (s * s);
    BoxTest t;
    t.margins.push_back(b - std::abs(q0));
    for (double v : q1) t.margins.push_back(b - std::abs(v));
    for (double m : t.margins) t.inside = t.inside && m >= 0.0;
    return t;
}

/// Van der Corput radical inverse in base 2, for reproducible sampling.
inline double van_der_corput(unsigned k) {
    double v = 0.0, f = 0.5;
    while (k) {
        if (k & 1u) v += f;
        k >>= 1u;
        f *= 0.5;
    }
    return v;
}

/// Window bounds sampled at time t: x log-uniform in
/// [(K0/4) sqrt((T-t)|ln(T-t)|), eps0], xi uniform in |xi| <= alpha0 sqrt|ln theta(x)|.
inline TrapReport check_D2(const PhysTrajectory& tr, double t, const SimParams& p, int x_samples = 24, int xi_samples = 16) {
    const double th = p.T - t;
    if (!(th > 0.0 && th < 1.0)) throw DomainError("check_D2 needs 0 < T - t < 1");
    const double x_lo = 0.25 * p.K0 * std::sqrt(th * std::abs(std::log(th))), x_hi = p.eps0;
    TrapReport r;
    double mv = p.delta0_value(), mg = std::numeric_limits<double>::infinity(), mh = p.C0prime;
    if (x_lo < x_hi) {
        for (int k = 0; k < x_samples; ++k) {
            const double u = (x_samples == 1) ? 0.5 : (k + 0.5) / x_samples;
            const double x = x_lo * std::pow(x_hi / x_lo, u);
            TimeOfX tx{};
            try {
                tx = t_of_x(x, p);
            } catch (const DomainError&) {
                continue;  // x beyond the range where t(x) is defined
            }
            const double tau = (t - tx.t) / tx.theta;
            if (tau < 0.0) continue;  // window not started yet
            const double rad = p.alpha0 * std::sqrt(std::abs(std::log(tx.theta)));
            std::vector<double> xi;
            for (int j = 0; j < xi_samples; ++j) xi.push_back(rad * (2.0 * van_der_corput(static_cast<unsigned>(j) + 1u) - 1.0));
            const WindowField w = window_extract(tr, x, tau, xi, p);
            const double uh = hat_u(tau, p);
            const double gb = p.C0 / std::sqrt(std::abs(std::log(tx.theta)));
            for (std::size_t j = 0; j < xi.size(); ++j) {
                mv = std::min(mv, p.delta0_value() - std::abs(w.values[j] - uh));
                mg = std::min(mg, gb - std::abs(w.grad[j]));
                mh = std::min(mh, p.C0prime - std::abs(w.hess[j]));
            }
        }
    }
    if (!std::isfinite(mg)) mg = p.C0;
    r.margins[Constraint::D2_value] = mv;
    r.margins[Constraint::D2_grad] = mg;
    r.margins[Constraint::D2_hess] = mh;
    r.finalize();
    return r;
}

/// Drift of U and U_x since t0 over |x| >= eps0/4.
inline TrapReport check_D3(const PhysicalField& u_t, const PhysicalField& u_t0, const SimParams& p) {
    if (u_t.x != u_t0.x) throw DomainError("check_D3 needs a common grid");
    const auto& x = u_t.x;
    const std::size_t n = x.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = u_t.u[i] - u_t0.u[i];
    double sv = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(x[i]) < 0.25 * p.eps0) continue;
        sv = std::max(sv, std::abs(diff[i]));
        if (i > 0 && i + 1 < n) {
            const auto s = detail::stencil3(x[i] - x[i - 1], x[i + 1] - x[i]);
            sg = std::max(sg, std::abs(s.d1m * diff[i - 1] + s.d10 * diff[i] + s.d1p * diff[i + 1]));
        }
    }
    TrapReport r;
    r.margins[Constraint::D3_value] = p.eta0 - sv;
    r.margins[Constraint::D3_grad] = p.eta0 - sg;
    r.finalize();
    return r;
}

/// Everything check_all may look at; physical parts are optional.
struct TrapState {
    const ModeDecomposition* md = nullptr;
    const YGrid* grid = nullptr;
    double s = 0.0;
    const PhysTrajectory* phys = nullptr;  // enables D2
    double t = 0.0;
    const PhysicalField* u_t = nullptr;    // with u_t0 enables D3
    const PhysicalField* u_t0 = nullptr;
};

inline TrapReport check_all(const TrapState& st, const SimParams& p) {
    TrapReport r;
    if (st.md && st.grid) r.merge(check_D1(*st.md, *st.grid, st.s, p));
    if (st.phys) r.merge(check_D2(*st.phys, st.t, p));
    if (st.u_t && st.u_t0) r.merge(check_D3(*st.u_t, *st.u_t0, p));
    r.finalize();
    return r;
}

}  // namespace blowup
