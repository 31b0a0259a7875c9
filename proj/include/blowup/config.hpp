#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "params.hpp"
#include "sim_solver.hpp"

namespace blowup {

enum class Command { simulate, simulate_physical, shoot, sweep, modes, residual, verify_profile, final_profile, ode };

inline const char* to_string(Command c) {
    static const char* names[] = {"simulate", "simulate-physical", "shoot", "sweep", "modes",
                                  "residual", "verify-profile", "final-profile", "ode"};
    return names[static_cast<int>(c)];
}

inline std::optional<Command> command_from_string(const std::string& s) {
    for (int k = 0; k <= static_cast<int>(Command::ode); ++k)
        if (s == to_string(static_cast<Command>(k))) return static_cast<Command>(k);
    return std::nullopt;
}

/// Everything a run needs. Model and solver constants plus the per-command
/// controls; all of it can be set by key.
struct RunConfig {
    Command command = Command::simulate;
    std::string output_dir = ".";
    SimParams params;
    SolverConfig solver;

    // initial data
    double d0 = 0.0;
    double d1 = 0.0;
    // similarity runs
    double s_end = 30.0;
    double snapshot_every = 0.1;
    bool enforce_trap = false;
    // sweep / refine
    int sweep_res = 17;
    int refine_depth = 0;
    int refine_factor = 4;
    int threads = 0;  // 0: hardware concurrency
    // verify-profile fit window
    double fit_lo = 13.0;
    double fit_hi = 28.0;
    // physical runs
    double phys_gap = 1e-10;  // run until T - t = phys_gap
    bool phys_select_d0 = true;
    double phys_x_min = 1e-6;
    double phys_x_log_end = 0.1;
    int phys_n_log = 500;
    double phys_dx_far = 0.002;
    double phys_x_max = 4.0;
    double phys_dt_base = 1e-3;
    // ode
    std::optional<double> w0_init;  // unset: 0
    std::optional<double> w2_init;  // unset: -1/((4+4a) s0)
    double ode_s_end = 1e4;

    void validate() const {
        params.validate();
        solver.validate();
        auto need = [](bool ok, const std::string& msg) {
            if (!ok) throw ValidationError(msg);
        };
        need(std::abs(d0) <= 2.0 && std::abs(d1) <= 2.0, "d0 and d1 must lie in [-2, 2]");
        need(params.dim == 1 || d1 == 0.0, "d1 must be 0 when dim > 1");
        need(s_end > params.s0, "s_end must exceed s0");
        need(snapshot_every > 0.0, "snapshot_every must be positive");
        need(sweep_res >= 2, "sweep_res must be >= 2");
        need(refine_depth >= 0, "refine_depth must be >= 0");
        need(refine_factor >= 2, "refine_factor must be >= 2");
        need(threads >= 0, "threads must be >= 0");
        need(fit_lo < fit_hi, "fit_lo must be below fit_hi");
        need(phys_gap > 0.0 && phys_gap < std::exp(-params.s0), "phys_gap must lie in (0, T - t0)");
        need(0.0 < phys_x_min && phys_x_min < phys_x_log_end && phys_x_log_end < phys_x_max, "need 0 < phys_x_min < phys_x_log_end < phys_x_max");
        need(phys_n_log >= 2 && phys_dx_far > 0.0 && phys_dt_base > 0.0, "physical grid controls must be positive");
        need(ode_s_end > params.s0, "ode_s_end must exceed s0");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v) {
    // accept a leading unicode minus as well
    std::string t = v;
    if (t.rfind("\xE2\x88\x92", 0) == 0) t = "-" + t.substr(3);
    double out = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && t[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || !std::isfinite(out)) throw ValidationError("'" + v + "' is not a finite number");
    return out;
}

inline int parse_int(const std::string& v) {
    const double d = parse_real(v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ValidationError("'" + v + "' is not an integer");
    return static_cast<int>(d);
}

inline bool parse_bool(const std::string& v) {
    std::string t = v;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ValidationError("'" + v + "' is not a boolean");
}

inline std::optional<double> parse_auto(const std::string& v) {
    if (v == "auto" || v == "null") return std::nullopt;
    return parse_real(v);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto real = [&](const char* k, double RunConfig::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.*m = parse_real(v); }; };
        auto preal = [&](const char* k, double SimParams::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.params.*m = parse_real(v); }; };
        auto sreal = [&](const char* k, double SolverConfig::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.solver.*m = parse_real(v); }; };
        auto integer = [&](const char* k, int RunConfig::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.*m = parse_int(v); }; };
        auto flag = [&](const char* k, bool RunConfig::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.*m = parse_bool(v); }; };
        auto opt = [&](const char* k, std::optional<double> RunConfig::*m) { t[k] = [m](RunConfig& c, const std::string& v) { c.*m = parse_auto(v); }; };

        preal("alpha", &SimParams::alpha);
        t["dim"] = [](RunConfig& c, const std::string& v) { c.params.dim = parse_int(v); };
        t["N"] = t["dim"];
        preal("T", &SimParams::T);
        preal("s0", &SimParams::s0);
        preal("K0", &SimParams::K0);
        preal("A", &SimParams::A);
        preal("eps0", &SimParams::eps0);
        preal("alpha0", &SimParams::alpha0);
        t["delta0"] = [](RunConfig& c, const std::string& v) { c.params.delta0 = parse_auto(v); };
        preal("eta0", &SimParams::eta0);
        preal("C0", &SimParams::C0);
        preal("C0prime", &SimParams::C0prime);
        preal("a_far", &SimParams::a_far);

        t["y_max"] = [](RunConfig& c, const std::string& v) { c.solver.y_max = parse_auto(v); };
        sreal("dy", &SolverConfig::dy);
        sreal("ds", &SolverConfig::ds);
        sreal("cfl_safety", &SolverConfig::cfl_safety);
        sreal("blowup_guard", &SolverConfig::blowup_guard);
        t["scheme"] = [](RunConfig& c, const std::string& v) {
            if (v == "semi_implicit_CN") c.solver.scheme = Scheme::semi_implicit_CN;
            else if (v == "explicit_RK2") c.solver.scheme = Scheme::explicit_RK2;
            else throw ValidationError("'" + v + "' is not one of semi_implicit_CN, explicit_RK2");
        };
        t["formulation"] = [](RunConfig& c, const std::string& v) {
            if (v == "W") c.solver.formulation = Formulation::W_equation;
            else if (v == "Q") c.solver.formulation = Formulation::Q_equation;
            else throw ValidationError("'" + v + "' is not one of W, Q");
        };

        t["command"] = [](RunConfig& c, const std::string& v) {
            auto cmd = command_from_string(v);
            if (!cmd) throw ValidationError("unknown command '" + v + "'");
            c.command = *cmd;
        };
        t["output_dir"] = [](RunConfig& c, const std::string& v) { c.output_dir = v; };

        real("d0", &RunConfig::d0);
        real("d1", &RunConfig::d1);
        real("s_end", &RunConfig::s_end);
        real("snapshot_every", &RunConfig::snapshot_every);
        flag("enforce_trap", &RunConfig::enforce_trap);
        integer("sweep_res", &RunConfig::sweep_res);
        integer("refine_depth", &RunConfig::refine_depth);
        integer("refine_factor", &RunConfig::refine_factor);
        integer("threads", &RunConfig::threads);
        real("fit_lo", &RunConfig::fit_lo);
        real("fit_hi", &RunConfig::fit_hi);
        real("phys_gap", &RunConfig::phys_gap);
        flag("phys_select_d0", &RunConfig::phys_select_d0);
        real("phys_x_min", &RunConfig::phys_x_min);
        real("phys_x_log_end", &RunConfig::phys_x_log_end);
        integer("phys_n_log", &RunConfig::phys_n_log);
        real("phys_dx_far", &RunConfig::phys_dx_far);
        real("phys_x_max", &RunConfig::phys_x_max);
        real("phys_dt_base", &RunConfig::phys_dt_base);
        opt("w0_init", &RunConfig::w0_init);
        opt("w2_init", &RunConfig::w2_init);
        real("ode_s_end", &RunConfig::ode_s_end);
        return t;
    }();
    return table;
}

}  // namespace detail

/// Sets one key; `where` prefixes error messages ("line 3", "--set", ...).
inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
    const auto& tab = detail::setters();
    auto it = tab.find(key);
    if (it == tab.end()) throw ValidationError(where + ": unknown key '" + key + "'");
    try {
        it->second(cfg, value);
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + key + ": " + e.what());
    }
}

/// Known keys, sorted.
inline std::vector<std::string> config_keys() {
    std::vector<std::string> k;
    for (const auto& [name, _] : detail::setters()) k.push_back(name);
    return k;
}

/// Applies key = value lines or one JSON object onto cfg (no validation).
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
    const std::string body = detail::trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("JSON: ") + e.what());
        }
        for (const auto& [key, val] : j.items()) {
            std::string v;
            if (val.is_string()) v = val.get<std::string>();
            else if (val.is_null()) v = "null";
            else if (val.is_boolean()) v = val.get<bool>() ? "true" : "false";
            else if (val.is_number()) v = val.dump();
            else throw ValidationError("field '" + key + "': expected a scalar");
            set_key(cfg, key, v, "field '" + key + "'");
        }
        return;
    }
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(no);
        if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
        set_key(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), where);
    }
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    apply_config_text(cfg, text);
    cfg.validate();
    return cfg;
}

/// Echo of every key with its current value, for run summaries.
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    const SimParams& p = c.params;
    j["command"] = to_string(c.command);
    j["output_dir"] = c.output_dir;
    j["alpha"] = p.alpha;
    j["dim"] = p.dim;
    j["T"] = p.T;
    j["s0"] = p.s0;
    j["K0"] = p.K0;
    j["A"] = p.A;
    j["eps0"] = p.eps0;
    j["alpha0"] = p.alpha0;
    j["delta0"] = p.delta0 ? nlohmann::json(*p.delta0) : nlohmann::json(nullptr);
    j["eta0"] = p.eta0;
    j["C0"] = p.C0;
    j["C0prime"] = p.C0prime;
    j["a_far"] = p.a_far;
    j["y_max"] = c.solver.y_max ? nlohmann::json(*c.solver.y_max) : nlohmann::json(nullptr);
    j["dy"] = c.solver.dy;
    j["ds"] = c.solver.ds;
    j["cfl_safety"] = c.solver.cfl_safety;
    j["blowup_guard"] = c.solver.blowup_guard;
    j["scheme"] = c.solver.scheme == Scheme::semi_implicit_CN ? "semi_implicit_CN" : "explicit_RK2";
    j["formulation"] = c.solver.formulation == Formulation::W_equation ? "W" : "Q";
    j["d0"] = c.d0;
    j["d1"] = c.d1;
    j["s_end"] = c.s_end;
    j["snapshot_every"] = c.snapshot_every;
    j["enforce_trap"] = c.enforce_trap;
    j["sweep_res"] = c.sweep_res;
    j["refine_depth"] = c.refine_depth;
    j["refine_factor"] = c.refine_factor;
    j["threads"] = c.threads;
    j["fit_lo"] = c.fit_lo;
    j["fit_hi"] = c.fit_hi;
    j["phys_gap"] = c.phys_gap;
    j["phys_select_d0"] = c.phys_select_d0;
    j["phys_x_min"] = c.phys_x_min;
    j["phys_x_log_end"] = c.phys_x_log_end;
    j["phys_n_log"] = c.phys_n_log;
    j["phys_dx_far"] = c.phys_dx_far;
    j["phys_x_max"] = c.phys_x_max;
    j["phys_dt_base"] = c.phys_dt_base;
    j["w0_init"] = c.w0_init ? nlohmann::json(*c.w0_init) : nlohmann::json(nullptr);
    j["w2_init"] = c.w2_init ? nlohmann::json(*c.w2_init) : nlohmann::json(nullptr);
    j["ode_s_end"] = c.ode_s_end;
    return j;
}

}  // namespace blowup
