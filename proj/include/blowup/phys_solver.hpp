#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "params.hpp"
#include "profiles.hpp"

namespace blowup {

/// Static grid in x. half_line: nodes on [0, x_max] with even symmetry
/// (radial when dim > 1); otherwise nodes on [-x_max, x_max], dim must be 1.
struct PhysGrid {
    std::vector<double> x;
    double x_min = 0.0;  // first positive node of the log part (0 for uniform grids)
    double x_max = 0.0;
    bool half_line = true;
    int dim = 1;

    std::size_t size() const { return x.size(); }

    /// 0, then n_log+1 log-spaced nodes on [x_min, x_log_end], then uniform dx_far to x_max.
    static PhysGrid log_uniform(int dim, double x_min = 1e-6, double x_log_end = 0.1, std::size_t n_log = 500,
                                double dx_far = 0.002, double x_max = 4.0) {
        if (!(0.0 < x_min && x_min < x_log_end && x_log_end < x_max && dx_far > 0.0 && n_log >= 2))
            throw DomainError("log_uniform: need 0 < x_min < x_log_end < x_max, dx_far > 0");
        PhysGrid g;
        g.dim = dim;
        g.x_min = x_min;
        g.x_max = x_max;
        g.x.push_back(0.0);
        const double r = std::log(x_log_end / x_min) / static_cast<double>(n_log);
        for (std::size_t k = 0; k <= n_log; ++k) g.x.push_back(x_min * std::exp(r * static_cast<double>(k)));
        g.x.back() = x_log_end;
        const auto m = static_cast<std::size_t>(std::ceil((x_max - x_log_end) / dx_far - 1e-9));
        const double h = (x_max - x_log_end) / static_cast<double>(m);
        for (std::size_t k = 1; k <= m; ++k) g.x.push_back(x_log_end + h * static_cast<double>(k));
        g.x.back() = x_max;
        return g;
    }

    static PhysGrid uniform(int dim, double x_max, double h) {
        if (!(x_max > 0.0 && h > 0.0)) throw DomainError("uniform grid needs x_max > 0 and h > 0");
        PhysGrid g;
        g.dim = dim;
        g.x_max = x_max;
        const auto m = static_cast<std::size_t>(std::llround(x_max / h));
        if (std::abs(static_cast<double>(m) * h - x_max) > 1e-9 * x_max) throw DomainError("uniform grid: x_max must be a multiple of h");
        for (std::size_t k = 0; k <= m; ++k) g.x.push_back(h * static_cast<double>(k));
        return g;
    }

    /// Mirror of a half-line grid onto the full line (dim 1 only).
    static PhysGrid mirrored(const PhysGrid& half) {
        if (!half.half_line || half.dim != 1) throw DomainError("mirrored needs a 1D half-line grid");
        PhysGrid g = half;
        g.half_line = false;
        g.x.clear();
        for (std::size_t k = half.x.size() - 1; k >= 1; --k) g.x.push_back(-half.x[k]);
        for (double v : half.x) g.x.push_back(v);
        return g;
    }
};

enum class FarBoundary { far_field_slope, zero_flux };

struct PhysConfig {
    double dt_base = 1e-3;
    double reaction_cfl = 0.05;  // dt <= reaction_cfl / max e^U
    double gradient_cfl = 0.5;   // dt <= gradient_cfl * h / (2 alpha |U_x|)
    double blowup_margin = 10.0;
    bool reaction = true;        // false: pure heat (plus gradient term if alpha != 0)
    FarBoundary far = FarBoundary::far_field_slope;
    std::size_t frame_stride = 1;

    void validate() const {
        if (!(dt_base > 0.0 && reaction_cfl > 0.0 && gradient_cfl > 0.0)) throw ValidationError("physical step controls must be positive");
        if (!(blowup_margin > 0.0)) throw ValidationError("blowup_margin must be positive");
        if (frame_stride == 0) throw ValidationError("frame_stride must be >= 1");
    }
};

struct PhysFrame {
    double t;
    std::vector<double> u;
};

struct PhysTrajectory {
    PhysGrid grid;
    std::vector<PhysFrame> frames;  // frames.front() is the initial state
    RunStatus status = RunStatus::ok;
    std::string message;
    std::size_t steps = 0;

    double t_last() const { return frames.back().t; }
    PhysicalField field(std::size_t k) const { return {grid.x, frames.at(k).u, frames.at(k).t}; }
    PhysicalField last() const { return field(frames.size() - 1); }
};

/// Called after each accepted step; return false to stop.
using PhysObserver = std::function<bool(const PhysicalField&)>;

namespace detail {

/// d/dx of -ln(1 + a x^2)
inline double far_slope(double x, double a) { return -2.0 * a * x / (1.0 + a * x * x); }

/// Three-point weights (i-1, i, i+1) for f' and f'' on a nonuniform grid.
struct Stencil3 {
    double d1m, d10, d1p, d2m, d20, d2p;
};

inline Stencil3 stencil3(double hm, double hp) {
    const double den = hm * hp * (hm + hp);
    return {-hp * hp / den, (hp * hp - hm * hm) / den, hm * hm / den, 2.0 * hp / den, -2.0 * (hm + hp) / den, 2.0 * hm / den};
}

}  // namespace detail

/// Linear operator Delta U = U'' + (N-1)/x U' with its boundary data:
/// (L U)_i = lo_i U_{i-1} + di_i U_i + up_i U_{i+1} + b_i.
struct PhysOperator {
    std::vector<double> lo, di, up, b;
};

inline PhysOperator build_phys_operator(const PhysGrid& g, const SimParams& p, FarBoundary far) {
    const std::size_t n = g.size();
    if (n < 4) throw DomainError("physical grid needs at least 4 nodes");
    PhysOperator op{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double a = p.a_far;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto s = detail::stencil3(g.x[i] - g.x[i - 1], g.x[i + 1] - g.x[i]);
        op.lo[i] = s.d2m;
        op.di[i] = s.d20;
        op.up[i] = s.d2p;
        if (g.half_line && g.dim > 1) {
            const double k = (g.dim - 1.0) / g.x[i];
            op.lo[i] += k * s.d1m;
            op.di[i] += k * s.d10;
            op.up[i] += k * s.d1p;
        }
    }
    auto ghost_end = [&](std::size_t i, std::size_t j, double slope_out) {
        // node i on the boundary, j its neighbour; ghost across i with outward slope
        const double h = std::abs(g.x[i] - g.x[j]);
        op.di[i] = -2.0 / (h * h);
        (i < j ? op.up : op.lo)[i] = 2.0 / (h * h);
        op.b[i] = 2.0 * slope_out / h;
        if (g.half_line && g.dim > 1) op.b[i] += (g.dim - 1.0) / std::abs(g.x[i]) * slope_out;
    };
    const double s_right = far == FarBoundary::far_field_slope ? detail::far_slope(g.x[n - 1], a) : 0.0;
    ghost_end(n - 1, n - 2, s_right);
    if (g.half_line) {
        // symmetric ghost at x = -x1; radial limit multiplies by N
        const double h = g.x[1] - g.x[0];
        op.di[0] = -2.0 * g.dim / (h * h);
        op.up[0] = 2.0 * g.dim / (h * h);
    } else {
        // outward normal points to -x on the left end
        const double s_left = far == FarBoundary::far_field_slope ? -detail::far_slope(g.x[0], a) : 0.0;
        ghost_end(0, 1, s_left);
    }
    return op;
}

/// Physical-variable engine: Crank-Nicolson diffusion, Heun for
/// alpha |U_x|^2 + e^U, adaptive dt.
class PhysSolver {
public:
    PhysSolver(PhysGrid grid, PhysConfig cfg, SimParams p) : grid_(std::move(grid)), cfg_(cfg), p_(p) {
        cfg_.validate();
        p_.validate();
        if (!grid_.half_line && grid_.dim != 1) throw ValidationError("full-line physical grid requires dim = 1");
        if (grid_.dim != p_.dim) throw ValidationError("grid dimension differs from params.dim");
        for (std::size_t i = 1; i < grid_.size(); ++i)
            if (!(grid_.x[i] > grid_.x[i - 1])) throw DomainError("physical grid nodes must increase strictly");
        op_ = build_phys_operator(grid_, p_, cfg_.far);
        hmin_.resize(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            double h = std::numeric_limits<double>::infinity();
            if (i > 0) h = std::min(h, grid_.x[i] - grid_.x[i - 1]);
            if (i + 1 < grid_.size()) h = std::min(h, grid_.x[i + 1] - grid_.x[i]);
            hmin_[i] = h;
        }
    }

    const PhysGrid& grid() const { return grid_; }

    /// U_x on the grid: nonuniform centered, 0 at the symmetry node,
    /// imposed slope at far ends.
    std::vector<double> gradient(const std::vector<double>& u) const {
        const std::size_t n = u.size();
        std::vector<double> d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const auto s = detail::stencil3(grid_.x[i] - grid_.x[i - 1], grid_.x[i + 1] - grid_.x[i]);
            d[i] = s.d1m * u[i - 1] + s.d10 * u[i] + s.d1p * u[i + 1];
        }
        const bool slope = cfg_.far == FarBoundary::far_field_slope;
        d[n - 1] = slope ? detail::far_slope(grid_.x[n - 1], p_.a_far) : 0.0;
        if (!grid_.half_line) d[0] = slope ? detail::far_slope(grid_.x[0], p_.a_far) : 0.0;
        return d;
    }

    /// Runs from init to t_end; every frame_stride-th step is stored.
    PhysTrajectory evolve(const PhysicalField& init, double t_end, const PhysObserver& obs = {}) const {
        if (!(t_end < p_.T)) throw DomainError("evolve_physical needs t_end < T");
        if (!(init.t < t_end)) throw DomainError("evolve_physical needs init.t < t_end");
        if (init.u.size() != grid_.size()) throw DomainError("initial field does not match the grid");
        for (double v : init.u)
            if (!std::isfinite(v)) throw DomainError("initial field is not finite");
        const double guard = -std::log(p_.T - t_end) + cfg_.blowup_margin;
        PhysTrajectory tr;
        tr.grid = grid_;
        tr.frames.push_back({init.t, init.u});
        std::vector<double> u = init.u;
        double t = init.t;
        const std::size_t n = u.size();
        std::vector<double> nl0, nl1, rhs(n), pred(n);
        while (t < t_end) {
            const double umax = *std::max_element(u.begin(), u.end());
            if (umax > guard) {
                tr.status = RunStatus::blowup;
                tr.message = "blowup guard reached at t = " + std::to_string(t);
                break;
            }
            const std::vector<double> du = gradient(u);
            double dt = std::min(cfg_.dt_base, t_end - t);
            if (cfg_.reaction) dt = std::min(dt, cfg_.reaction_cfl / std::exp(umax));
            if (p_.alpha != 0.0)
                for (std::size_t i = 0; i < n; ++i) {
                    const double v = 2.0 * std::abs(p_.alpha * du[i]);
                    if (v > 0.0) dt = std::min(dt, cfg_.gradient_cfl * hmin_[i] / v);
                }
            if (!(dt > 0.0) || t + dt == t) {
                tr.status = RunStatus::numerical_failure;
                tr.message = "time step underflow at t = " + std::to_string(t);
                break;
            }
            explicit_terms(u, du, nl0);
            // (I - dt/2 L) u1 = (I + dt/2 L) u + dt b + dt NL
            for (std::size_t i = 0; i < n; ++i) rhs[i] = u[i] + 0.5 * dt * apply_linear(u, i) + dt * op_.b[i];
            for (std::size_t i = 0; i < n; ++i) pred[i] = rhs[i] + dt * nl0[i];
            implicit_solve(dt, pred);
            explicit_terms(pred, gradient(pred), nl1);
            for (std::size_t i = 0; i < n; ++i) u[i] = rhs[i] + 0.5 * dt * (nl0[i] + nl1[i]);
            implicit_solve(dt, u);
            t = (t_end - t - dt <= 1e-15 * std::abs(t_end)) ? t_end : t + dt;
            ++tr.steps;
            bool finite = true;
            for (double v : u) finite = finite && std::isfinite(v);
            if (!finite) {
                tr.status = RunStatus::numerical_failure;
                tr.message = "non-finite value at t = " + std::to_string(t);
                break;
            }
            const bool keep = (tr.steps % cfg_.frame_stride == 0) || t >= t_end;
            if (keep) tr.frames.push_back({t, u});
            if (obs && !obs(PhysicalField{grid_.x, u, t})) {
                if (!keep) tr.frames.push_back({t, u});
                tr.status = RunStatus::stopped;
                break;
            }
        }
        return tr;
    }

private:
    double apply_linear(const std::vector<double>& u, std::size_t i) const {
        double v = op_.di[i] * u[i];
        if (i > 0) v += op_.lo[i] * u[i - 1];
        if (i + 1 < u.size()) v += op_.up[i] * u[i + 1];
        return v;
    }

    void explicit_terms(const std::vector<double>& u, const std::vector<double>& du, std::vector<double>& out) const {
        out.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            out[i] = p_.alpha * du[i] * du[i];
            if (cfg_.reaction) out[i] += std::exp(u[i]);
        }
    }

    void implicit_solve(double dt, std::vector<double>& rhs) const {
        const std::size_t n = rhs.size();
        std::vector<double> lo(n - 1), di(n), up(n - 1);
        for (std::size_t i = 0; i < n; ++i) di[i] = 1.0 - 0.5 * dt * op_.di[i];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            up[i] = -0.5 * dt * op_.up[i];
            lo[i] = -0.5 * dt * op_.lo[i + 1];
        }
        solve_tridiagonal(std::move(lo), std::move(di), std::move(up), rhs);
    }

    PhysGrid grid_;
    PhysConfig cfg_;
    SimParams p_;
    PhysOperator op_;
    std::vector<double> hmin_;
};

/// Value, first and second derivative of the cubic through 4 nodes around x.
struct Jet3 {
    double v, d1, d2;
};

inline Jet3 cubic_interp(const std::vector<double>& xs, const std::vector<double>& f, double x) {
    const std::size_t n = xs.size();
    if (n < 4) throw DomainError("cubic_interp needs 4 nodes");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin() - 2, 0));
    k = std::min(k, n - 4);
    Jet3 out{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < 4; ++a) {
        // L_a(x) = prod_{b != a} (x - x_b)/(x_a - x_b)
        double den = 1.0;
        std::array<double, 3> r{};
        std::size_t m = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            if (b == a) continue;
            den *= xs[k + a] - xs[k + b];
            r[m++] = x - xs[k + b];
        }
        const double v = r[0] * r[1] * r[2];
        const double d1 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
        const double d2 = 2.0 * (r[0] + r[1] + r[2]);
        out.v += f[k + a] * v / den;
        out.d1 += f[k + a] * d1 / den;
        out.d2 += f[k + a] * d2 / den;
    }
    return out;
}

/// U, U_x, U_xx at (x, t): cubic in space, linear in time between frames.
/// Half-line grids use the even extension.
inline Jet3 sample_trajectory(const PhysTrajectory& tr, double x, double t) {
    const auto& fr = tr.frames;
    if (fr.empty() || t < fr.front().t - 1e-15 || t > fr.back().t + 1e-15)
        throw DomainError("window exceeds trajectory coverage in time");
    const double ax = tr.grid.half_line ? std::abs(x) : x;
    if (ax > tr.grid.x.back() || ax < tr.grid.x.front()) throw DomainError("window exceeds trajectory coverage in space");
    auto it = std::lower_bound(fr.begin(), fr.end(), t, [](const PhysFrame& f, double v) { return f.t < v; });
    std::size_t j = static_cast<std::size_t>(it - fr.begin());
    if (j == 0) j = 1;
    if (j >= fr.size()) j = fr.size() - 1;
    const PhysFrame& f0 = fr[j - 1];
    const PhysFrame& f1 = fr.size() == 1 ? fr[0] : fr[j];
    const Jet3 a = cubic_interp(tr.grid.x, f0.u, ax);
    const Jet3 b = cubic_interp(tr.grid.x, f1.u, ax);
    const double w = (f1.t > f0.t) ? std::clamp((t - f0.t) / (f1.t - f0.t), 0.0, 1.0) : 1.0;
    Jet3 out{(1 - w) * a.v + w * b.v, (1 - w) * a.d1 + w * b.d1, (1 - w) * a.d2 + w * b.d2};
    if (tr.grid.half_line && x < 0.0) out.d1 = -out.d1;
    return out;
}

/// Rescaled window at anchor x0 and time tau for the given xi nodes (N = 1
/// direction along x).
inline WindowField window_extract(const PhysTrajectory& tr, double x0, double tau, const std::vector<double>& xi, const SimParams& p) {
    const TimeOfX tx = t_of_x(x0, p);
    const double th = tx.theta, sq = std::sqrt(th), lt = std::log(th);
    const double t = tx.t + tau * th;
    WindowField w;
    w.x0 = x0;
    w.theta = th;
    w.tau = tau;
    w.xi = xi;
    for (double z : xi) {
        const Jet3 j = sample_trajectory(tr, x0 + z * sq, t);
        w.values.push_back(lt + j.v);
        w.grad.push_back(sq * j.d1);
        w.hess.push_back(th * j.d2);
    }
    return w;
}

/// First tau covered by the trajectory at anchor x0 and the last one (capped at 1).
inline std::pair<double, double> window_tau_range(const PhysTrajectory& tr, double x0, const SimParams& p) {
    const TimeOfX tx = t_of_x(x0, p);
    const double lo = std::max(0.0, (tr.frames.front().t - tx.t) / tx.theta);
    const double hi = std::min(1.0, (tr.t_last() - tx.t) / tx.theta);
    return {lo, hi};
}

/// sup over the windows of (1 - tau) e^U + sqrt(1 - tau) |grad U|.
inline double no_blowup_monitor(const std::vector<WindowField>& wins) {
    double m = 0.0;
    for (const auto& w : wins) {
        const double a = 1.0 - w.tau;
        for (std::size_t k = 0; k < w.values.size(); ++k)
            m = std::max(m, a * std::exp(w.values[k]) + std::sqrt(std::max(a, 0.0)) * std::abs(w.grad[k]));
    }
    return m;
}

struct FinalProfile {
    double t_last = 0.0, t_prev = 0.0;
    std::vector<double> x, u, grad, x_grad;
    double cauchy_r = 0.0;
    double cauchy_diff = 0.0;  // sup_{x >= cauchy_r} |U(t_last) - U(t_prev)|
};

/// U and U_x at the last frame on x > 0. t_prev is the last stored frame with
/// T - t_prev >= 10 (T - t_last).
inline FinalProfile final_profile_extract(const PhysTrajectory& tr, const SimParams& p, double cauchy_r) {
    const auto& fr = tr.frames;
    if (fr.size() < 2) throw DomainError("final_profile_extract needs at least two frames");
    FinalProfile out;
    out.t_last = fr.back().t;
    const double gap = p.T - out.t_last;
    std::size_t prev = 0;
    for (std::size_t k = 0; k + 1 < fr.size(); ++k)
        if (p.T - fr[k].t >= 10.0 * gap) prev = k;
    out.t_prev = fr[prev].t;
    out.cauchy_r = cauchy_r;
    const auto& g = tr.grid;
    const std::size_t n = g.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(g.x[i] > 0.0)) continue;
        const auto s = detail::stencil3(g.x[i] - g.x[i - 1], g.x[i + 1] - g.x[i]);
        const auto& u = fr.back().u;
        const double du = s.d1m * u[i - 1] + s.d10 * u[i] + s.d1p * u[i + 1];
        out.x.push_back(g.x[i]);
        out.u.push_back(u[i]);
        out.grad.push_back(du);
        out.x_grad.push_back(g.x[i] * std::abs(du));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(g.x[i]) >= cauchy_r) out.cauchy_diff = std::max(out.cauchy_diff, std::abs(fr.back().u[i] - fr[prev].u[i]));
    return out;
}

}  // namespace blowup
