#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "params.hpp"
#include "profiles.hpp"

namespace blowup {

enum class Scheme { semi_implicit_CN, explicit_RK2 };
enum class Formulation { W_equation, Q_equation };

struct SolverConfig {
    std::optional<double> y_max;  // unset: 1.1 * 2 K0 sqrt(s_end)
    double dy = 0.05;
    double ds = 0.02;
    double cfl_safety = 0.5;
    Scheme scheme = Scheme::semi_implicit_CN;
    Formulation formulation = Formulation::W_equation;
    double blowup_guard = 50.0;

    double y_max_for(double s_end, const SimParams& p) const {
        return y_max ? *y_max : 1.1 * 2.0 * p.K0 * std::sqrt(s_end);
    }

    void validate() const {
        if (!(dy > 0.0 && dy <= 0.05 + 1e-12)) throw ValidationError("dy must lie in (0, 0.05]");
        if (!(ds > 0.0)) throw ValidationError("ds must be positive");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ValidationError("cfl_safety must lie in (0, 1]");
        if (y_max && !(*y_max > 0.0)) throw ValidationError("y_max must be positive");
        if (!(blowup_guard > 0.0)) throw ValidationError("blowup_guard must be positive");
    }
};

/// 2(psi - 1)
inline double potential_V(double y_norm, double s, const SimParams& p) {
    return 2.0 * (psi_alpha(y_norm, s, p) - 1.0);
}

/// (a-1)[|grad Q + grad psi|^2/(Q + psi) - |grad psi|^2/psi]. Radial: gradients
/// are radial components.
inline double nonlinear_G(double q, double grad_q, double y_norm, double s, const SimParams& p) {
    if (p.alpha == 1.0) return 0.0;
    const PsiJet j = psi_jet(y_norm, s, p);
    const double z = q + j.value;
    if (!(z > 0.0)) throw SolverError("nonlinear_G: Q + psi <= 0");
    const double g = grad_q + j.dr;
    return (p.alpha - 1.0) * (g * g / z - j.dr * j.dr / j.value);
}

/// -psi_s + lap psi - (y/2).grad psi + psi^2 - psi + (a-1)|grad psi|^2/psi
inline double residual_R(double y_norm, double s, const SimParams& p) {
    const PsiJet j = psi_jet(y_norm, s, p);
    return -j.ds + j.lap - 0.5 * y_norm * j.dr + j.value * j.value - j.value + (p.alpha - 1.0) * j.dr * j.dr / j.value;
}

/// sup of |R(y, s)| over |y| <= z_max sqrt(s), n uniform samples.
inline double residual_sup(double s, const SimParams& p, double z_max = 50.0, int n = 20001) {
    if (n < 2) throw DomainError("residual_sup needs n >= 2");
    const double ym = z_max * std::sqrt(s);
    double m = 0.0;
    for (int k = 0; k < n; ++k) m = std::max(m, std::abs(residual_R(ym * k / (n - 1), s, p)));
    return m;
}

namespace detail {

/// Stencil of Delta - (y/2).grad with second-order upwinding, offsets -2..2.
struct Row {
    std::array<double, 5> c{};
    bool boundary = false;
};

inline std::vector<Row> transport_rows(const YGrid& g) {
    const std::size_t n = g.size();
    const double h = g.dy, h2 = h * h;
    std::vector<Row> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        Row& r = rows[i];
        const double y = g.y[i];
        if (g.radial() && i == 0) {
            r.c[2] = -2.0 * g.dim / h2;
            r.c[3] = 2.0 * g.dim / h2;
            continue;
        }
        if (i == n - 1 || (!g.radial() && i == 0)) {
            r.boundary = true;
            continue;
        }
        r.c[1] += 1.0 / h2;
        r.c[2] += -2.0 / h2;
        r.c[3] += 1.0 / h2;
        if (g.radial()) {
            const double k = (g.dim - 1.0) / (2.0 * y * h);
            r.c[1] -= k;
            r.c[3] += k;
        }
        const double v = 0.5 * y;  // outward velocity
        if (v > 0.0) {
            r.c[2] -= v * 3.0 / (2.0 * h);
            r.c[1] -= v * -4.0 / (2.0 * h);
            if (g.radial() && i == 1) r.c[3] -= v * 1.0 / (2.0 * h);  // mirror f(-h) = f(h)
            else r.c[0] -= v * 1.0 / (2.0 * h);
        } else if (v < 0.0) {
            r.c[2] -= v * -3.0 / (2.0 * h);
            r.c[3] -= v * 4.0 / (2.0 * h);
            r.c[4] -= v * -1.0 / (2.0 * h);
        }
    }
    return rows;
}

inline double apply_row(const Row& r, const std::vector<double>& f, std::size_t i) {
    double acc = 0.0;
    for (int k = -2; k <= 2; ++k) {
        const double c = r.c[k + 2];
        if (c == 0.0) continue;
        acc += c * f[static_cast<std::size_t>(static_cast<long>(i) + k)];
    }
    return acc;
}

}  // namespace detail

/// (Delta - y/2.grad + 1) f: centered Laplacian, second-order upwind drift,
/// one-sided stencils on the outer nodes.
inline std::vector<double> apply_L(const YGrid& g, const std::vector<double>& f) {
    const auto rows = detail::transport_rows(g);
    const std::size_t n = g.size();
    const double h = g.dy, h2 = h * h;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!rows[i].boundary) {
            out[i] = detail::apply_row(rows[i], f, i) + f[i];
            continue;
        }
        // outer node: one-sided second derivative and upwind first derivative
        const bool right = (i == n - 1);
        const std::size_t a = i, b = right ? i - 1 : i + 1, c = right ? i - 2 : i + 2, d = right ? i - 3 : i + 3;
        const double fyy = (2.0 * f[a] - 5.0 * f[b] + 4.0 * f[c] - f[d]) / h2;
        double fy = (3.0 * f[a] - 4.0 * f[b] + f[c]) / (2.0 * h);
        if (!right) fy = -fy;
        const double y = g.y[i];
        double lap = fyy;
        if (g.radial()) lap += (g.dim - 1.0) * fy / y;
        out[i] = lap - 0.5 * y * fy + f[i];
    }
    return out;
}

struct SimSnapshot {
    double s = 0.0;
    double q0 = 0.0, q1 = 0.0, q2 = 0.0;  // q1, q2: first component / isotropic entry
    double sup_qminus_w = 0.0;            // sup |Q_-|/(1+|y|^3) on |y| <= 2K0 sqrt(s)
    double sup_gradperp_w = 0.0;
    double sup_qe = 0.0;
    double max_w = 0.0;
    double w_center = 0.0;
    double prof_err_value = 0.0;  // sup |e^W - e^Phi(y/sqrt s)|
    double prof_err_grad = 0.0;   // sup |d/dy (e^W - e^Phi(y/sqrt s))|
    std::vector<double> w;        // filled when fields are kept
};

struct SimTrajectory {
    std::vector<SimSnapshot> snaps;
    RunStatus status = RunStatus::ok;
    double s_last = 0.0;
    std::string message;
    SimilarityField last;
};

/// Called at each snapshot; return false to stop the run.
using SnapshotObserver = std::function<bool(const SimilarityField&, const ModeDecomposition&, const SimSnapshot&)>;

/// Similarity-variable engine on a fixed uniform grid. One instance per run;
/// not shared across threads.
class SimSolver {
public:
    SimSolver(YGrid grid, SolverConfig cfg, SimParams p)
        : grid_(std::move(grid)), cfg_(cfg), p_(p), quad_(grid_), rows_(detail::transport_rows(grid_)) {
        cfg_.validate();
        p_.validate();
        if (grid_.dim != p_.dim) throw ValidationError("grid dimension differs from params.dim");
    }

    /// Grid sized for s_end with the configured spacing.
    static SimSolver for_horizon(double s_end, const SolverConfig& cfg, const SimParams& p) {
        return SimSolver(YGrid::make(cfg.y_max_for(s_end, p), cfg.dy, p.dim), cfg, p);
    }

    const YGrid& grid() const { return grid_; }
    const RhoQuadrature& quadrature() const { return quad_; }
    const SimParams& params() const { return p_; }
    const SolverConfig& config() const { return cfg_; }

    /// Advances W (or Q, per formulation) by one step of at most max_ds.
    /// Returns the status and the step actually taken.
    RunStatus step(SimilarityField& st, double max_ds, double* taken = nullptr) {
        const std::size_t n = grid_.size();
        double peak = -std::numeric_limits<double>::infinity();
        for (double w : st.w) peak = std::max(peak, w);
        if (!std::isfinite(peak)) return RunStatus::numerical_failure;
        if (peak > cfg_.blowup_guard) return RunStatus::blowup;
        double ds = std::min({cfg_.ds, max_ds, cfg_.cfl_safety / std::exp(peak)});
        if (cfg_.scheme == Scheme::explicit_RK2) {
            const double h = grid_.dy, vmax = 0.5 * grid_.extent();
            ds = std::min({ds, 0.2 * h * h / grid_.dim, 0.5 * h / vmax});
        }
        std::vector<double> u(n);
        const bool qform = cfg_.formulation == Formulation::Q_equation;
        if (qform) {
            for (std::size_t i = 0; i < n; ++i) u[i] = std::exp(st.w[i]) - psi_alpha(std::abs(grid_.y[i]), st.s, p_);
        } else {
            u = st.w;
        }
        const double s = st.s;
        std::vector<double> n0, n1, next;
        if (!explicit_terms(u, s, n0)) return RunStatus::numerical_failure;
        if (cfg_.scheme == Scheme::semi_implicit_CN) {
            const BandedLU& lu = factor_for(ds);
            std::vector<double> base(n);
            for (std::size_t i = 0; i < n; ++i)
                base[i] = rows_[i].boundary ? 0.0 : u[i] + 0.5 * ds * detail::apply_row(rows_[i], u, i);
            std::vector<double> pred(n);
            for (std::size_t i = 0; i < n; ++i) pred[i] = rows_[i].boundary ? 0.0 : base[i] + ds * n0[i];
            lu.solve(pred);
            if (!explicit_terms(pred, s + ds, n1)) return RunStatus::numerical_failure;
            next.resize(n);
            for (std::size_t i = 0; i < n; ++i) next[i] = rows_[i].boundary ? 0.0 : base[i] + 0.5 * ds * (n0[i] + n1[i]);
            lu.solve(next);
        } else {
            std::vector<double> pred(n), l0(n), l1(n);
            for (std::size_t i = 0; i < n; ++i) {
                l0[i] = rows_[i].boundary ? 0.0 : detail::apply_row(rows_[i], u, i);
                pred[i] = u[i] + ds * (l0[i] + n0[i]);
            }
            extrapolate(pred);
            if (!explicit_terms(pred, s + ds, n1)) return RunStatus::numerical_failure;
            next.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                l1[i] = rows_[i].boundary ? 0.0 : detail::apply_row(rows_[i], pred, i);
                next[i] = u[i] + 0.5 * ds * (l0[i] + n0[i] + l1[i] + n1[i]);
            }
            extrapolate(next);
        }
        st.s = s + ds;
        if (qform) {
            for (std::size_t i = 0; i < n; ++i) {
                const double z = next[i] + psi_alpha(std::abs(grid_.y[i]), st.s, p_);
                if (!(z > 0.0)) return RunStatus::numerical_failure;
                st.w[i] = std::log(z);
            }
        } else {
            st.w = std::move(next);
        }
        for (double w : st.w)
            if (!std::isfinite(w)) return RunStatus::numerical_failure;
        if (taken) *taken = ds;
        return RunStatus::ok;
    }

    /// Diagnostics for one state (decomposition computed on the fly).
    SimSnapshot snapshot(const SimilarityField& st, ModeDecomposition* md_out = nullptr, bool keep_field = false) const {
        const std::size_t n = grid_.size();
        const double s = st.s;
        std::vector<double> Q(n), ew(n);
        for (std::size_t i = 0; i < n; ++i) {
            ew[i] = std::exp(st.w[i]);
            Q[i] = ew[i] - psi_alpha(std::abs(grid_.y[i]), s, p_);
        }
        ModeDecomposition md = decompose(quad_, Q, s, p_);
        md.grad_q_perp = grad_perp(quad_, grid_gradient(grid_, Q), s, p_);
        SimSnapshot sn;
        sn.s = s;
        sn.q0 = md.q0;
        sn.q1 = md.q1[0];
        sn.q2 = md.q2[0];
        const double inner = 2.0 * p_.K0 * std::sqrt(s);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::abs(grid_.y[i]);
            sn.sup_qe = std::max(sn.sup_qe, std::abs(md.q_e[i]));
            if (r <= inner) {
                const double wgt = 1.0 + r * r * r;
                sn.sup_qminus_w = std::max(sn.sup_qminus_w, std::abs(md.q_minus[i]) / wgt);
                sn.sup_gradperp_w = std::max(sn.sup_gradperp_w, std::abs(md.grad_q_perp[i]) / wgt);
            }
        }
        sn.max_w = *std::max_element(st.w.begin(), st.w.end());
        sn.w_center = st.w[grid_.radial() ? 0 : n / 2];
        const std::vector<double> dew = grid_gradient(grid_, ew);
        const double sq = std::sqrt(s);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = std::abs(grid_.y[i]) / sq;
            const double ephi = std::exp(phi_alpha(z, p_.alpha));
            double dphi = ephi * phi_alpha_prime(z, p_.alpha) / sq;
            if (grid_.y[i] < 0.0) dphi = -dphi;
            sn.prof_err_value = std::max(sn.prof_err_value, std::abs(ew[i] - ephi));
            sn.prof_err_grad = std::max(sn.prof_err_grad, std::abs(dew[i] - dphi));
        }
        if (keep_field) sn.w = st.w;
        if (md_out) *md_out = std::move(md);
        return sn;
    }

    /// Runs to s_end with snapshots every snapshot_every (aligned to init.s).
    SimTrajectory evolve(const SimilarityField& init, double s_end, double snapshot_every, const SnapshotObserver& obs = {},
                         bool keep_fields = false) {
        if (!(init.s < s_end)) throw DomainError("evolve needs init.s < s_end");
        if (init.w.size() != grid_.size()) throw DomainError("evolve: field does not match the grid");
        SimTrajectory tr;
        SimilarityField st = init;
        auto emit = [&]() {
            ModeDecomposition md;
            SimSnapshot sn = snapshot(st, &md, keep_fields);
            tr.snaps.push_back(sn);
            return obs ? obs(st, md, tr.snaps.back()) : true;
        };
        bool go = emit();
        long k = 1;
        while (go && st.s < s_end - 1e-12) {
            const double target = std::min(s_end, init.s + static_cast<double>(k) * snapshot_every);
            while (st.s < target - 1e-12) {
                const RunStatus rs = step(st, target - st.s);
                if (rs != RunStatus::ok) {
                    tr.status = rs;
                    tr.s_last = st.s;
                    tr.message = std::string(to_string(rs)) + " at s = " + std::to_string(st.s);
                    tr.last = st;
                    return tr;
                }
            }
            st.s = target;  // remove rounding drift from the landing step
            ++k;
            go = emit();
        }
        tr.status = go ? RunStatus::ok : RunStatus::stopped;
        tr.s_last = st.s;
        tr.last = std::move(st);
        return tr;
    }

private:
    bool explicit_terms(const std::vector<double>& u, double s, std::vector<double>& out) const {
        const std::size_t n = u.size();
        out.assign(n, 0.0);
        const std::vector<double> du = grid_gradient(grid_, u);
        if (cfg_.formulation == Formulation::W_equation) {
            for (std::size_t i = 0; i < n; ++i) out[i] = p_.alpha * du[i] * du[i] + std::expm1(u[i]);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double r = std::abs(grid_.y[i]);
                const PsiJet j = psi_jet(r, s, p_);
                const double V = 2.0 * (j.value - 1.0);
                const double z = u[i] + j.value;
                if (!(z > 0.0)) return false;
                double G = 0.0;
                if (p_.alpha != 1.0) {
                    // radial derivative of psi carries the sign of y on the full line
                    const double dpsi = grid_.y[i] < 0.0 ? -j.dr : j.dr;
                    const double gg = du[i] + dpsi;
                    G = (p_.alpha - 1.0) * (gg * gg / z - dpsi * dpsi / j.value);
                }
                const double R = -j.ds + j.lap - 0.5 * r * j.dr + j.value * j.value - j.value + (p_.alpha - 1.0) * j.dr * j.dr / j.value;
                out[i] = (1.0 + V) * u[i] + u[i] * u[i] + G + R;
            }
        }
        for (double v : out)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void extrapolate(std::vector<double>& f) const {
        const std::size_t n = f.size();
        f[n - 1] = 2.0 * f[n - 2] - f[n - 3];
        if (!grid_.radial()) f[0] = 2.0 * f[1] - f[2];
    }

    const BandedLU& factor_for(double ds) {
        auto it = lu_cache_.find(ds);
        if (it != lu_cache_.end()) return it->second;
        if (lu_cache_.size() > 8) lu_cache_.clear();
        const int n = static_cast<int>(grid_.size());
        BandedLU lu(n, 2, 2);
        for (int i = 0; i < n; ++i) {
            const detail::Row& r = rows_[i];
            if (r.boundary) {
                // linear extrapolation toward the outflow boundary
                const int dir = (i == n - 1) ? -1 : 1;
                lu.set(i, i, 1.0);
                lu.set(i, i + dir, -2.0);
                lu.set(i, i + 2 * dir, 1.0);
                continue;
            }
            for (int k = -2; k <= 2; ++k) {
                const int j = i + k;
                if (j < 0 || j >= n) continue;
                const double v = (k == 0 ? 1.0 : 0.0) - 0.5 * ds * r.c[k + 2];
                if (v != 0.0) lu.set(i, j, v);
            }
        }
        lu.factor();
        return lu_cache_.emplace(ds, std::move(lu)).first->second;
    }

    YGrid grid_;
    SolverConfig cfg_;
    SimParams p_;
    RhoQuadrature quad_;
    std::vector<detail::Row> rows_;
    std::map<double, BandedLU> lu_cache_;
};

}  // namespace blowup
