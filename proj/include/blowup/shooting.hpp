#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "initial_data.hpp"
#include "phys_solver.hpp"
#include "params.hpp"
#include "sim_solver.hpp"
#include "trap.hpp"

namespace blowup {

struct ShootConfig {
    double s_end = 30.0;
    double snapshot_every = 0.1;
    int post_exit_snapshots = 2;  // extra snapshots after the exit, for the derivative
    bool keep_snapshots = false;
    bool run_to_end = false;      // ignore exits and integrate to s_end
};

enum class OutcomeKind { exited, trapped, solver_failure };

inline const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::exited: return "exited";
        case OutcomeKind::trapped: return "trapped";
        case OutcomeKind::solver_failure: return "solver_failure";
    }
    return "?";
}

struct ShootOutcome {
    double d0 = 0.0;
    std::vector<double> d1;
    OutcomeKind kind = OutcomeKind::trapped;
    double exit_s = std::numeric_limits<double>::infinity();  // infinity: stayed trapped to s_end
    std::optional<Constraint> exit_constraint;
    std::vector<int> exit_sign;       // per exiting component among (Q0, Q1); 0 = did not exit
    double exit_rate = 0.0;           // d/ds of the exiting mode at exit_s
    bool transversal = true;          // exit_sign * exit_rate > 0 (Q0/Q1 exits)
    double gamma0 = 0.0, gamma1 = 0.0;  // (s^2/A)(Q0, Q1) at exit_s (or at the last snapshot)
    double initial_q0 = 0.0, initial_q1 = 0.0;
    bool initial_in_box = false;      // (Q0, Q1)(s0) in [-A/s0^2, A/s0^2]^2
    double s_last = 0.0;
    double min_other_ratio = std::numeric_limits<double>::infinity();  // min over snapshots before exit of margin/bound, non-(Q0,Q1)
    std::string message;
    std::vector<SimSnapshot> snapshots;  // when keep_snapshots
};

namespace detail {

/// Bound of each D1 constraint at s, for margin ratios.
inline double d1_bound(Constraint c, double s, const SimParams& p) {
    switch (c) {
        case Constraint::Q2: return p.A * p.A * std::log(s) / (s * s);
        case Constraint::Qe: return p.A * p.A / std::sqrt(s);
        default: return p.A / (s * s);
    }
}

/// Derivative at x of the Lagrange polynomial through (xs, ys) (2 or 3 points).
inline double lagrange_derivative(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.size() == 2) return (ys[1] - ys[0]) / (xs[1] - xs[0]);
    double d = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
        double den = 1.0, num = 0.0;
        for (std::size_t b = 0; b < 3; ++b)
            if (b != a) den *= xs[a] - xs[b];
        for (std::size_t b = 0; b < 3; ++b) {
            if (b == a) continue;
            double term = 1.0;
            for (std::size_t c = 0; c < 3; ++c)
                if (c != a && c != b) term *= x - xs[c];
            num += term;
        }
        d += ys[a] * num / den;
    }
    return d;
}

struct Rec {
    double s, q0, q1;
    TrapReport rep;
};

}  // namespace detail

/// One trajectory from the (d0, d1) data, with the D1 trap checked at each snapshot.
inline ShootOutcome shoot(double d0, const std::vector<double>& d1, const SimParams& p, const SolverConfig& cfg, const ShootConfig& sc = {}) {
    ShootOutcome out;
    out.d0 = d0;
    out.d1 = d1;
    if (std::abs(d0) > 2.0 + 1e-12) throw DomainError("shoot: d0 outside [-2, 2]");
    for (double v : d1)
        if (std::abs(v) > 2.0 + 1e-12) throw DomainError("shoot: d1 outside [-2, 2]");
    InitialDataSpec spec;
    spec.d0 = d0;
    spec.d1 = d1;
    spec.params = p;
    SimSolver solver = SimSolver::for_horizon(sc.s_end, cfg, p);
    SimilarityField init;
    try {
        init = build_initial_W(spec, solver.grid());
    } catch (const DomainError& e) {
        out.kind = OutcomeKind::solver_failure;
        out.message = e.what();
        out.s_last = p.s0;
        return out;
    }
    std::vector<detail::Rec> recs;
    std::optional<std::size_t> exit_idx;
    auto obs = [&](const SimilarityField&, const ModeDecomposition& md, const SimSnapshot& sn) {
        TrapReport rep = check_D1(md, solver.grid(), sn.s, p);
        recs.push_back({sn.s, md.q0, md.q1[0], rep});
        if (recs.size() == 1) {
            out.initial_q0 = md.q0;
            out.initial_q1 = md.q1[0];
            out.initial_in_box = in_hat_VA(md.q0, md.q1, sn.s, p.A).inside;
        }
        if (!exit_idx) {
            for (const auto& [c, m] : rep.margins) {
                if (c == Constraint::Q0 || c == Constraint::Q1) continue;
                out.min_other_ratio = std::min(out.min_other_ratio, m / detail::d1_bound(c, sn.s, p));
            }
            if (!rep.in_set) exit_idx = recs.size() - 1;
        }
        if (sc.run_to_end) return true;
        return !(exit_idx && recs.size() > *exit_idx + static_cast<std::size_t>(sc.post_exit_snapshots));
    };
    SimTrajectory tr = solver.evolve(init, sc.s_end, sc.snapshot_every, obs, false);
    out.s_last = tr.s_last;
    if (sc.keep_snapshots) out.snapshots = tr.snaps;
    const double A = p.A;
    if (!exit_idx) {
        if (tr.status == RunStatus::blowup || tr.status == RunStatus::numerical_failure) {
            out.kind = OutcomeKind::solver_failure;
            out.message = tr.message;
        } else {
            out.kind = OutcomeKind::trapped;
        }
        if (!recs.empty()) {
            const auto& r = recs.back();
            out.gamma0 = r.s * r.s / A * r.q0;
            out.gamma1 = r.s * r.s / A * r.q1;
        }
        return out;
    }
    out.kind = OutcomeKind::exited;
    const std::size_t k = *exit_idx;
    const auto& cur = recs[k].rep;
    // earliest interpolated crossing among the violated constraints
    double best_s = std::numeric_limits<double>::infinity();
    for (const auto& [c, m] : cur.margins) {
        if (m >= 0.0) continue;
        double sc_ = recs[k].s;
        if (k > 0) {
            const double m0 = recs[k - 1].rep.margins.at(c);
            sc_ = recs[k - 1].s + (recs[k].s - recs[k - 1].s) * m0 / (m0 - m);
        }
        if (sc_ < best_s) {
            best_s = sc_;
            out.exit_constraint = c;
        }
    }
    out.exit_s = best_s;
    // modes at s*: linear interpolation between the bracketing snapshots
    double q0s = recs[k].q0, q1s = recs[k].q1;
    if (k > 0) {
        const double w = (best_s - recs[k - 1].s) / (recs[k].s - recs[k - 1].s);
        q0s = (1 - w) * recs[k - 1].q0 + w * recs[k].q0;
        q1s = (1 - w) * recs[k - 1].q1 + w * recs[k].q1;
    }
    out.gamma0 = best_s * best_s / A * q0s;
    out.gamma1 = best_s * best_s / A * q1s;
    out.exit_sign = {0, 0};
    if (cur.margins.at(Constraint::Q0) < 0.0) out.exit_sign[0] = recs[k].q0 > 0 ? 1 : -1;
    if (cur.margins.at(Constraint::Q1) < 0.0) out.exit_sign[1] = recs[k].q1 > 0 ? 1 : -1;
    // derivative of the exiting mode from up to three snapshots around s*
    std::vector<double> xs, y0, y1;
    const std::size_t lo = k > 0 ? k - 1 : 0, hi = std::min(recs.size() - 1, lo + 2);
    for (std::size_t j = lo; j <= hi; ++j) {
        xs.push_back(recs[j].s);
        y0.push_back(recs[j].q0);
        y1.push_back(recs[j].q1);
    }
    if (xs.size() >= 2 && out.exit_constraint &&
        (*out.exit_constraint == Constraint::Q0 || *out.exit_constraint == Constraint::Q1)) {
        const bool zero = *out.exit_constraint == Constraint::Q0;
        out.exit_rate = detail::lagrange_derivative(xs, zero ? y0 : y1, best_s);
        const int w = out.exit_sign[zero ? 0 : 1];
        out.transversal = w * out.exit_rate > 0.0;
    }
    return out;
}

/// Runs f(i) for i in [0, n) on `threads` workers; results land by index.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Gamma with |component| below tol read as 0.
/// Roundoff in Q1 at d1 = 0 grows like e^{(s-s0)/2} and reaches ~1e-12 by s = 30.
inline int noisy_sign(double v, double tol = 1e-9) { return std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1); }

/// Total wrapped angle change of Gamma along the cell boundary, in turns.
inline int winding_number(const std::vector<std::pair<double, double>>& loop) {
    double total = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const auto& a = loop[k];
        const auto& b = loop[(k + 1) % loop.size()];
        double d = std::atan2(b.second, b.first) - std::atan2(a.second, a.first);
        while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        total += d;
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Corner test: each Gamma component takes both signs (or 0) on the corners.
inline bool straddles(const std::vector<const ShootOutcome*>& corners) {
    int lo0 = 2, hi0 = -2, lo1 = 2, hi1 = -2;
    for (const auto* o : corners) {
        const int a = noisy_sign(o->gamma0), b = noisy_sign(o->gamma1);
        lo0 = std::min(lo0, a);
        hi0 = std::max(hi0, a);
        lo1 = std::min(lo1, b);
        hi1 = std::max(hi1, b);
    }
    return lo0 <= 0 && hi0 >= 0 && lo1 <= 0 && hi1 >= 0;
}

inline double outcome_exit_s(const ShootOutcome& o, const ShootConfig& sc) {
    return o.kind == OutcomeKind::trapped ? sc.s_end : (o.kind == OutcomeKind::exited ? o.exit_s : o.s_last);
}

struct SweepResult {
    int grid_res = 0;
    double lo = -2.0, hi = 2.0;
    std::vector<ShootOutcome> cells;  // row-major, d0 index outer
    int winding = 0;
    std::optional<std::pair<int, int>> best_cell;  // lower-left node of the best straddling cell
    int quadrants_seen = 0;                        // distinct (sign Q0, sign Q1) exit patterns among Q0/Q1 exits
    bool all_transversal = true;
    int in_box_count = 0;                          // nodes whose data lies in the box at s0

    const ShootOutcome& at(int i, int j) const { return cells[static_cast<std::size_t>(i * grid_res + j)]; }
    double node(int i) const { return lo + (hi - lo) * i / (grid_res - 1); }
};

/// Boundary of the (res x res) node grid, counterclockwise in (d0, d1).
inline std::vector<std::pair<int, int>> boundary_loop(int res) {
    std::vector<std::pair<int, int>> loop;
    for (int i = 0; i < res - 1; ++i) loop.emplace_back(i, 0);
    for (int j = 0; j < res - 1; ++j) loop.emplace_back(res - 1, j);
    for (int i = res - 1; i > 0; --i) loop.emplace_back(i, res - 1);
    for (int j = res - 1; j > 0; --j) loop.emplace_back(0, j);
    return loop;
}

/// Exit map over [-2, 2]^2 (dim = 1).
inline SweepResult classify_exit_map(int grid_res, const SimParams& p, const SolverConfig& cfg, const ShootConfig& sc,
                                     unsigned threads = default_threads()) {
    if (p.dim != 1) throw DomainError("classify_exit_map needs dim = 1");
    if (grid_res < 2) throw DomainError("classify_exit_map needs grid_res >= 2");
    SweepResult r;
    r.grid_res = grid_res;
    r.cells.resize(static_cast<std::size_t>(grid_res * grid_res));
    parallel_for(r.cells.size(), threads, [&](std::size_t k) {
        const int i = static_cast<int>(k) / grid_res, j = static_cast<int>(k) % grid_res;
        r.cells[k] = shoot(r.node(i), {r.node(j)}, p, cfg, sc);
    });
    std::vector<std::pair<double, double>> loop;
    for (auto [i, j] : boundary_loop(grid_res)) loop.emplace_back(r.at(i, j).gamma0, r.at(i, j).gamma1);
    r.winding = winding_number(loop);
    std::vector<bool> seen(4, false);
    for (const auto& o : r.cells) {
        if (o.initial_in_box) ++r.in_box_count;
        if (o.kind != OutcomeKind::exited || !o.exit_constraint) continue;
        if (*o.exit_constraint != Constraint::Q0 && *o.exit_constraint != Constraint::Q1) continue;
        r.all_transversal = r.all_transversal && o.transversal;
        const int a = noisy_sign(o.gamma0), b = noisy_sign(o.gamma1);
        if (a != 0 && b != 0) seen[static_cast<std::size_t>((a > 0) * 2 + (b > 0))] = true;
    }
    r.quadrants_seen = static_cast<int>(std::count(seen.begin(), seen.end(), true));
    double best = -1.0;
    for (int i = 0; i + 1 < grid_res; ++i)
        for (int j = 0; j + 1 < grid_res; ++j) {
            std::vector<const ShootOutcome*> c{&r.at(i, j), &r.at(i + 1, j), &r.at(i, j + 1), &r.at(i + 1, j + 1)};
            if (!straddles(c)) continue;
            double m = 0.0;
            for (const auto* o : c) m = std::max(m, outcome_exit_s(*o, sc));
            if (m > best) {
                best = m;
                r.best_cell = std::make_pair(i, j);
            }
        }
    return r;
}

struct RefineLevel {
    int depth = 0;
    double d0_lo = 0, d0_hi = 0, d1_lo = 0, d1_hi = 0;
    double best_d0 = 0, best_d1 = 0;
    double achieved_exit_s = 0;  // running max over all sampled points so far
};

struct RefineResult {
    double d0 = 0.0, d1 = 0.0;
    double exit_s = 0.0;
    bool reached_end = false;
    std::vector<RefineLevel> levels;
    std::vector<ShootOutcome> transversality_samples;  // Q0/Q1 exits seen at the last level
};

struct RefinementFailed : SolverError {
    using SolverError::SolverError;
};

/// Nested subdivision of the best sweep cell, each level sampled on a
/// (factor+1)^2 grid and narrowed to the straddling sub-cell with the largest
/// corner exit time.
inline RefineResult refine(const SweepResult& sweep, int depth, int factor, const SimParams& p, const SolverConfig& cfg,
                           const ShootConfig& sc, unsigned threads = default_threads(),
                           const std::function<void(const RefineLevel&)>& on_level = {}) {
    if (!sweep.best_cell) throw RefinementFailed("refine: the sweep has no straddling cell");
    if (factor < 2) throw DomainError("refine needs factor >= 2");
    auto [bi, bj] = *sweep.best_cell;
    double a0 = sweep.node(bi), b0 = sweep.node(bi + 1), a1 = sweep.node(bj), b1 = sweep.node(bj + 1);
    std::map<std::pair<double, double>, ShootOutcome> cache;
    for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj) cache[{sweep.node(bi + di), sweep.node(bj + dj)}] = sweep.at(bi + di, bj + dj);
    RefineResult res;
    double best_s = -1.0, best_d0 = 0.5 * (a0 + b0), best_d1 = 0.5 * (a1 + b1);
    for (const auto& [k, o] : cache) {
        const double e = outcome_exit_s(o, sc);
        if (e > best_s) {
            best_s = e;
            best_d0 = k.first;
            best_d1 = k.second;
        }
    }
    RefineLevel l0{0, a0, b0, a1, b1, 0.5 * (a0 + b0), 0.5 * (a1 + b1), best_s};
    res.levels.push_back(l0);
    if (on_level) on_level(l0);
    res.d0 = l0.best_d0;
    res.d1 = l0.best_d1;
    res.exit_s = best_s;
    for (int lev = 1; lev <= depth; ++lev) {
        const int m = factor;
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) pts.emplace_back(a0 + (b0 - a0) * i / m, a1 + (b1 - a1) * j / m);
        std::vector<std::size_t> todo;
        for (std::size_t k = 0; k < pts.size(); ++k)
            if (!cache.count(pts[k])) todo.push_back(k);
        std::vector<ShootOutcome> fresh(todo.size());
        parallel_for(todo.size(), threads, [&](std::size_t k) {
            fresh[k] = shoot(pts[todo[k]].first, {pts[todo[k]].second}, p, cfg, sc);
        });
        for (std::size_t k = 0; k < todo.size(); ++k) cache[pts[todo[k]]] = std::move(fresh[k]);
        auto at = [&](int i, int j) -> const ShootOutcome& { return cache.at(pts[static_cast<std::size_t>(i * (m + 1) + j)]); };
        res.transversality_samples.clear();
        bool trapped = false;
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) {
                const ShootOutcome& o = at(i, j);
                const double e = outcome_exit_s(o, sc);
                if (e > best_s) {
                    best_s = e;
                    best_d0 = o.d0;
                    best_d1 = o.d1[0];
                }
                if (o.kind == OutcomeKind::trapped) trapped = true;
                if (o.kind == OutcomeKind::exited && o.exit_constraint &&
                    (*o.exit_constraint == Constraint::Q0 || *o.exit_constraint == Constraint::Q1))
                    res.transversality_samples.push_back(o);
            }
        std::optional<std::pair<int, int>> pick;
        double pick_s = -1.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                std::vector<const ShootOutcome*> c{&at(i, j), &at(i + 1, j), &at(i, j + 1), &at(i + 1, j + 1)};
                if (!straddles(c)) continue;
                double e = 0.0;
                for (const auto* o : c) e = std::max(e, outcome_exit_s(*o, sc));
                if (e > pick_s) {
                    pick_s = e;
                    pick = std::make_pair(i, j);
                }
            }
        if (!pick) {
            std::string msg = "refine: sign enclosure lost at depth " + std::to_string(lev) + " in [" + std::to_string(a0) + ", " +
                              std::to_string(b0) + "] x [" + std::to_string(a1) + ", " + std::to_string(b1) + "]; signs of Gamma by d0 row:";
            for (int i = 0; i <= m; ++i) {
                msg += "\n ";
                for (int j = 0; j <= m; ++j) {
                    const ShootOutcome& o = at(i, j);
                    const char* tag = "0+-";
                    char buf[64];
                    std::snprintf(buf, sizeof buf, " %c%c(%.3g)", tag[(noisy_sign(o.gamma0) + 3) % 3], tag[(noisy_sign(o.gamma1) + 3) % 3], o.gamma1);
                    msg += buf;
                }
            }
            throw RefinementFailed(msg);
        }
        const double na0 = a0 + (b0 - a0) * pick->first / m, nb0 = a0 + (b0 - a0) * (pick->first + 1) / m;
        const double na1 = a1 + (b1 - a1) * pick->second / m, nb1 = a1 + (b1 - a1) * (pick->second + 1) / m;
        a0 = na0;
        b0 = nb0;
        a1 = na1;
        b1 = nb1;
        RefineLevel lv{lev, a0, b0, a1, b1, best_d0, best_d1, best_s};
        res.levels.push_back(lv);
        if (on_level) on_level(lv);
        res.d0 = best_d0;
        res.d1 = best_d1;
        res.exit_s = best_s;
        if (trapped) {
            res.reached_end = true;
            break;
        }
    }
    return res;
}

struct PhysicalSelection {
    double d0 = 0.0;
    int iterations = 0;
    bool stayed_in_band = false;  // a run stayed in the band up to t_end
    PhysTrajectory trajectory;    // full run at the selected d0
};

/// Bisection of d0 (d1 = 0) on the physical engine: a run is "high" once
/// U(0,t) + ln(T-t) passes +band, "low" below -band. Stops at the first d0
/// whose run stays in the band up to t_end.
inline PhysicalSelection select_d0_physical(const SimParams& p, const PhysGrid& grid, const PhysConfig& pc, double t_end,
                                            double band = 1.0, int max_iter = 60) {
    if (!grid.half_line) throw DomainError("select_d0_physical expects a half-line grid");
    PhysSolver solver(grid, pc, p);
    auto run = [&](double d0, bool keep, int* verdict) {
        InitialDataSpec spec;
        spec.d0 = d0;
        spec.d1.assign(p.dim, 0.0);
        spec.params = p;
        const PhysicalField init = build_initial_U(spec, grid.x);
        int v = 0;
        PhysObserver obs = [&](const PhysicalField& f) {
            const double w = f.u[0] + std::log(p.T - f.t);
            if (w > band) v = 1;
            else if (w < -band) v = -1;
            return v == 0;
        };
        PhysTrajectory tr = solver.evolve(init, t_end, keep ? PhysObserver{} : obs);
        if (tr.status == RunStatus::blowup) v = 1;
        if (tr.status == RunStatus::numerical_failure) throw SolverError("select_d0_physical: " + tr.message);
        *verdict = v;
        return tr;
    };
    PhysicalSelection sel;
    double lo = -2.0, hi = 2.0;
    for (; sel.iterations < max_iter; ++sel.iterations) {
        const double mid = 0.5 * (lo + hi);
        int v = 0;
        run(mid, false, &v);
        if (v == 0) {
            sel.stayed_in_band = true;
            lo = hi = mid;
            ++sel.iterations;
            break;
        }
        (v > 0 ? hi : lo) = mid;
    }
    sel.d0 = 0.5 * (lo + hi);
    int v = 0;
    sel.trajectory = run(sel.d0, true, &v);
    return sel;
}

}  // namespace blowup
