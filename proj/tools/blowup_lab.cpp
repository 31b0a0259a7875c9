// blowup_lab: command-line driver for the similarity and physical solvers.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <blowup/config.hpp>
#include <blowup/initial_data.hpp>
#include <blowup/io.hpp>
#include <blowup/phys_solver.hpp>
#include <blowup/reduced_ode.hpp>
#include <blowup/shooting.hpp>
#include <blowup/sim_solver.hpp>
#include <blowup/trap.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blowup;

namespace {

constexpr int kOk = 0, kValidation = 2, kSolver = 3, kTrapExit = 4;

struct Ctx {
    RunConfig cfg;
    bool quiet = false;
    json summary;

    void log(const std::string& msg) const {
        if (!quiet) std::cerr << "[blowup_lab] " << msg << '\n';
    }
    std::string path(const std::string& name) const { return (fs::path(cfg.output_dir) / name).string(); }
    unsigned threads() const { return cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : default_threads(); }
};

InitialDataSpec data_spec(const RunConfig& c) {
    InitialDataSpec s;
    s.d0 = c.d0;
    s.d1.assign(c.params.dim, 0.0);
    if (c.params.dim == 1) s.d1[0] = c.d1;
    s.params = c.params;
    return s;
}

json outcome_json(const ShootOutcome& o) {
    json j;
    j["d0"] = o.d0;
    j["d1"] = o.d1;
    j["kind"] = to_string(o.kind);
    j["exit_s"] = std::isfinite(o.exit_s) ? json(o.exit_s) : json(nullptr);
    j["exit_constraint"] = o.exit_constraint ? json(to_string(*o.exit_constraint)) : json(nullptr);
    j["exit_sign"] = o.exit_sign;
    j["exit_rate"] = o.exit_rate;
    j["transversal"] = o.transversal;
    j["gamma"] = {o.gamma0, o.gamma1};
    j["initial_modes"] = {o.initial_q0, o.initial_q1};
    j["initial_in_box"] = o.initial_in_box;
    j["s_last"] = o.s_last;
    j["min_other_ratio"] = std::isfinite(o.min_other_ratio) ? json(o.min_other_ratio) : json(nullptr);
    if (!o.message.empty()) j["message"] = o.message;
    return j;
}

/// Similarity run from (d0, d1); the observer sees every snapshot.
SimTrajectory run_similarity(const Ctx& ctx, const SnapshotObserver& obs = {}) {
    const RunConfig& c = ctx.cfg;
    SimSolver solver = SimSolver::for_horizon(c.s_end, c.solver, c.params);
    const SimilarityField init = build_initial_W(data_spec(c), solver.grid());
    ctx.log("similarity run on " + std::to_string(solver.grid().size()) + " nodes to s = " + format_real(c.s_end));
    return solver.evolve(init, c.s_end, c.snapshot_every, obs, false);
}

int status_code(RunStatus s) { return (s == RunStatus::ok || s == RunStatus::stopped) ? kOk : kSolver; }

int cmd_simulate(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    auto f = open_output(ctx.path("simulate.csv"));
    CsvWriter csv(f, {"s", "Q0", "Q1", "Q2", "sup_Qminus_w", "sup_gradQperp_w", "sup_Qe", "max_W", "W_center", "prof_err_value",
                      "prof_err_grad"});
    std::optional<TrapReport> exit_report;
    double exit_s = 0.0;
    YGrid grid = SimSolver::for_horizon(c.s_end, c.solver, c.params).grid();
    SimTrajectory tr = run_similarity(ctx, [&](const SimilarityField&, const ModeDecomposition& md, const SimSnapshot& sn) {
        csv.row({sn.s, sn.q0, sn.q1, sn.q2, sn.sup_qminus_w, sn.sup_gradperp_w, sn.sup_qe, sn.max_w, sn.w_center, sn.prof_err_value,
                 sn.prof_err_grad});
        if (!c.enforce_trap) return true;
        TrapReport r = check_D1(md, grid, sn.s, c.params);
        if (r.in_set) return true;
        exit_report = r;
        exit_s = sn.s;
        return false;
    });
    ctx.summary["status"] = to_string(tr.status);
    ctx.summary["s_last"] = tr.s_last;
    if (!tr.message.empty()) ctx.summary["message"] = tr.message;
    if (exit_report) {
        ctx.summary["trap_exit"] = {{"s", exit_s}, {"constraint", to_string(*exit_report->first_violation)}};
        ctx.log("trap exit at s = " + format_real(exit_s) + " via " + to_string(*exit_report->first_violation));
        return kTrapExit;
    }
    return status_code(tr.status);
}

int cmd_modes(Ctx& ctx) {
    std::vector<ModeSample> ms;
    SimTrajectory tr = run_similarity(ctx, [&](const SimilarityField&, const ModeDecomposition&, const SimSnapshot& sn) {
        ms.push_back({sn.s, sn.q0, sn.q1, sn.q2});
        return true;
    });
    auto f = open_output(ctx.path("modes.csv"));
    CsvWriter csv(f, {"s", "Q0", "Q1", "Q2", "r0", "r1", "r2"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (ms.size() >= 3) {
        const ModeOdeReport rep = check_mode_odes(ms, ctx.cfg.params);
        csv.row({ms[0].s, ms[0].q0, ms[0].q1, ms[0].q2, nan, nan, nan});
        for (std::size_t k = 0; k < rep.s.size(); ++k) csv.row({ms[k + 1].s, ms[k + 1].q0, ms[k + 1].q1, ms[k + 1].q2, rep.r0[k], rep.r1[k], rep.r2[k]});
        csv.row({ms.back().s, ms.back().q0, ms.back().q1, ms.back().q2, nan, nan, nan});
        ctx.summary["sup_r"] = {rep.sup_r0, rep.sup_r1, rep.sup_r2};
        ctx.summary["slope_r"] = {loglog_slope(rep.s, rep.r0), loglog_slope(rep.s, rep.r1), loglog_slope(rep.s, rep.r2)};
    } else {
        for (const auto& m : ms) csv.row({m.s, m.q0, m.q1, m.q2, nan, nan, nan});
    }
    ctx.summary["status"] = to_string(tr.status);
    return status_code(tr.status);
}

int cmd_verify_profile(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    std::vector<double> s, ev, eg, fs_, fv, fg;
    SimTrajectory tr = run_similarity(ctx, [&](const SimilarityField&, const ModeDecomposition&, const SimSnapshot& sn) {
        s.push_back(sn.s);
        ev.push_back(sn.prof_err_value);
        eg.push_back(sn.prof_err_grad);
        if (sn.s >= c.fit_lo - 1e-9 && sn.s <= c.fit_hi + 1e-9) {
            fs_.push_back(sn.s);
            fv.push_back(sn.prof_err_value);
            fg.push_back(sn.prof_err_grad);
        }
        return true;
    });
    const double slope_v = loglog_slope(fs_, fv), slope_g = loglog_slope(fs_, fg);
    auto f = open_output(ctx.path("verify_profile.csv"));
    CsvWriter csv(f, {"s", "sup_err_value", "sup_err_grad", "fitted_slope"});
    for (std::size_t k = 0; k < s.size(); ++k) csv.row({s[k], ev[k], eg[k], slope_v});
    ctx.summary["fitted_slope_value"] = slope_v;
    ctx.summary["fitted_slope_grad"] = slope_g;
    ctx.summary["fit_window"] = {c.fit_lo, c.fit_hi};
    ctx.summary["status"] = to_string(tr.status);
    return status_code(tr.status);
}

int cmd_residual(Ctx& ctx) {
    auto f = open_output(ctx.path("residual.csv"));
    CsvWriter csv(f, {"s", "sup_R", "s_times_sup_R"});
    for (double s : {10.0, 20.0, 40.0, 80.0, 160.0, 320.0}) {
        const double r = residual_sup(s, ctx.cfg.params);
        csv.row({s, r, s * r});
    }
    return kOk;
}

int cmd_ode(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    const double w0 = c.w0_init.value_or(0.0);
    const double w2 = c.w2_init.value_or(-1.0 / ((4.0 + 4.0 * c.params.alpha) * c.params.s0));
    const ModeTrajectory tr = integrate_modes(w0, w2, c.params.s0, c.ode_s_end, c.params);
    auto f = open_output(ctx.path("ode.csv"));
    CsvWriter csv(f, {"s", "W0", "W2", "s*W2"});
    for (std::size_t k = 0; k < tr.s.size(); ++k) csv.row({tr.s[k], tr.w0[k], tr.w2[k], tr.s[k] * tr.w2[k]});
    ctx.summary["diverged"] = tr.diverged;
    if (tr.diverged) ctx.summary["diverged_at"] = tr.diverged_at;
    return kOk;
}

ShootConfig shoot_config(const RunConfig& c) {
    ShootConfig sc;
    sc.s_end = c.s_end;
    sc.snapshot_every = c.snapshot_every;
    return sc;
}

int cmd_shoot(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    const ShootOutcome o = shoot(c.d0, data_spec(c).d1, c.params, c.solver, shoot_config(c));
    auto f = open_output(ctx.path("shoot.json"));
    f << outcome_json(o).dump(2) << '\n';
    ctx.summary["kind"] = to_string(o.kind);
    return o.kind == OutcomeKind::solver_failure ? kSolver : kOk;
}

int cmd_sweep(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    const ShootConfig sc = shoot_config(c);
    ctx.log("sweep " + std::to_string(c.sweep_res) + "x" + std::to_string(c.sweep_res) + " on " + std::to_string(ctx.threads()) + " threads");
    const SweepResult r = classify_exit_map(c.sweep_res, c.params, c.solver, sc, ctx.threads());
    json out;
    out["outcomes"] = json::array();
    for (const auto& o : r.cells) out["outcomes"].push_back(outcome_json(o));
    out["winding"] = r.winding;
    out["quadrants_seen"] = r.quadrants_seen;
    out["all_transversal"] = r.all_transversal;
    out["in_box_count"] = r.in_box_count;
    out["best_cell"] = r.best_cell ? json({r.best_cell->first, r.best_cell->second}) : json(nullptr);
    int code = kOk;
    if (c.refine_depth > 0) {
        try {
            const RefineResult rr = refine(r, c.refine_depth, c.refine_factor, c.params, c.solver, sc, ctx.threads(), [&](const RefineLevel& l) {
                ctx.log("refine depth " + std::to_string(l.depth) + ": exit_s " + format_real(l.achieved_exit_s));
            });
            json levels = json::array();
            for (const auto& l : rr.levels)
                levels.push_back({{"depth", l.depth}, {"cell", {l.d0_lo, l.d0_hi, l.d1_lo, l.d1_hi}}, {"achieved_exit_s", l.achieved_exit_s}});
            out["refine"] = {{"d0", rr.d0}, {"d1", rr.d1}, {"exit_s", rr.exit_s}, {"reached_end", rr.reached_end}, {"levels", levels}};
        } catch (const RefinementFailed& e) {
            out["refine"] = {{"error", e.what()}};
            code = kSolver;
        }
    }
    auto f = open_output(ctx.path("sweep.json"));
    f << out.dump(2) << '\n';
    ctx.summary["winding"] = r.winding;
    return code;
}

PhysGrid physical_grid(const RunConfig& c) {
    return PhysGrid::log_uniform(c.params.dim, c.phys_x_min, c.phys_x_log_end, static_cast<std::size_t>(c.phys_n_log), c.phys_dx_far, c.phys_x_max);
}

PhysTrajectory run_physical(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    PhysConfig pc;
    pc.dt_base = c.phys_dt_base;
    const PhysGrid grid = physical_grid(c);
    const double t_end = c.params.T - c.phys_gap;
    if (c.phys_select_d0) {
        ctx.log("selecting d0 on the physical engine");
        PhysicalSelection sel = select_d0_physical(c.params, grid, pc, t_end);
        ctx.summary["d0_selected"] = sel.d0;
        ctx.summary["selection_iterations"] = sel.iterations;
        ctx.summary["stayed_in_band"] = sel.stayed_in_band;
        return std::move(sel.trajectory);
    }
    PhysSolver solver(grid, pc, c.params);
    return solver.evolve(build_initial_U(data_spec(c), grid.x), t_end);
}

int cmd_simulate_physical(Ctx& ctx) {
    const PhysTrajectory tr = run_physical(ctx);
    const double T = ctx.cfg.params.T;
    auto f = open_output(ctx.path("physical.csv"));
    CsvWriter csv(f, {"t", "s", "U_origin", "W_origin", "max_U"});
    for (const auto& fr : tr.frames) {
        const double th = T - fr.t;
        csv.row({fr.t, -std::log(th), fr.u[0], fr.u[0] + std::log(th), *std::max_element(fr.u.begin(), fr.u.end())});
    }
    ctx.summary["status"] = to_string(tr.status);
    ctx.summary["steps"] = tr.steps;
    ctx.summary["t_last"] = tr.t_last();
    return status_code(tr.status);
}

int cmd_final_profile(Ctx& ctx) {
    const PhysTrajectory tr = run_physical(ctx);
    const SimParams& p = ctx.cfg.params;
    const FinalProfile fp = final_profile_extract(tr, p, 0.25 * p.eps0);
    auto f = open_output(ctx.path("final_profile.csv"));
    CsvWriter csv(f, {"x", "U", "U_star", "err", "x_abs_grad_U"});
    for (std::size_t i = 0; i < fp.x.size(); ++i) {
        if (fp.x[i] >= 1.0) break;
        const double us = final_profile(fp.x[i], p.alpha);
        csv.row({fp.x[i], fp.u[i], us, fp.u[i] - us, fp.x_grad[i]});
    }
    ctx.summary["status"] = to_string(tr.status);
    ctx.summary["t_last"] = fp.t_last;
    ctx.summary["cauchy_diff"] = fp.cauchy_diff;
    return status_code(tr.status);
}

int dispatch(Ctx& ctx) {
    switch (ctx.cfg.command) {
        case Command::simulate: return cmd_simulate(ctx);
        case Command::simulate_physical: return cmd_simulate_physical(ctx);
        case Command::shoot: return cmd_shoot(ctx);
        case Command::sweep: return cmd_sweep(ctx);
        case Command::modes: return cmd_modes(ctx);
        case Command::residual: return cmd_residual(ctx);
        case Command::verify_profile: return cmd_verify_profile(ctx);
        case Command::final_profile: return cmd_final_profile(ctx);
        case Command::ode: return cmd_ode(ctx);
    }
    return kValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Similarity-variable and physical solvers for exp-type blowup"};
    std::string command, config_path, out_dir;
    std::vector<std::string> sets;
    bool quiet = false;
    app.add_option("command", command, "simulate | simulate-physical | shoot | sweep | modes | residual | verify-profile | final-profile | ode");
    app.add_option("--config", config_path, "key = value file or a JSON object");
    app.add_option("--set", sets, "key=value override (repeatable)");
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--quiet", quiet, "no log output");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    Ctx ctx;
    ctx.quiet = quiet;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ValidationError("cannot read config file " + config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            apply_config_text(ctx.cfg, buf.str());
        }
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ValidationError("--set " + kv + ": expected key=value");
            set_key(ctx.cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)), "--set");
        }
        if (!command.empty()) set_key(ctx.cfg, "command", command, "command");
        if (!out_dir.empty()) ctx.cfg.output_dir = out_dir;
        ctx.cfg.validate();
        fs::create_directories(ctx.cfg.output_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }

    const auto t_start = std::chrono::steady_clock::now();
    int rc = kOk;
    try {
        rc = dispatch(ctx);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = kValidation;
        ctx.summary["error"] = e.what();
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = kValidation;
        ctx.summary["error"] = e.what();
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        rc = kSolver;
        ctx.summary["error"] = e.what();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    json summary;
    summary["config"] = config_to_json(ctx.cfg);
    summary["result"] = ctx.summary;
    summary["exit_code"] = rc;
    summary["versions"] = {{"blowup_lab", "0.1.0"},
                           {"compiler", __VERSION__},
                           {"boost", BOOST_LIB_VERSION},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)}};
    summary["wall_clock_seconds"] = wall;
    try {
        auto f = open_output(ctx.path("summary.json"));
        f << summary.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
    ctx.log(std::string(to_string(ctx.cfg.command)) + " finished with exit code " + std::to_string(rc));
    return rc;
}
