#include <gtest/gtest.h>

#include <cmath>

#include <blowup/initial_data.hpp>
#include <blowup/sim_solver.hpp>

using namespace blowup;

namespace {

/// w' = e^w - 1 by classical RK4 with a small fixed step.
double ode_rk4(double w, double s0, double s1) {
    const int n = 20000;
    const double h = (s1 - s0) / n;
    auto f = [](double v) { return std::expm1(v); };
    for (int k = 0; k < n; ++k) {
        const double k1 = f(w), k2 = f(w + 0.5 * h * k1), k3 = f(w + 0.5 * h * k2), k4 = f(w + h * k3);
        w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return w;
}

SimilarityField constant_field(const YGrid& g, double c, double s) { return {g.y, std::vector<double>(g.size(), c), s}; }

}  // namespace

TEST(SimSolver, ClosedFormsAgreeWithDefinitions) {
    SimParams p;
    for (double y : {0.0, 1.0, 7.0})
        for (double s : {10.0, 30.0}) EXPECT_NEAR(potential_V(y, s, p), 2.0 * (psi_alpha(y, s, p) - 1.0), 1e-15);
    EXPECT_EQ(nonlinear_G(0.1, 0.2, 1.0, 10.0, p), 0.0);  // alpha = 1
    p.alpha = 0.0;
    const PsiJet j = psi_jet(2.0, 10.0, p);
    const double q = 0.05, gq = 0.01;
    EXPECT_NEAR(nonlinear_G(q, gq, 2.0, 10.0, p), -((gq + j.dr) * (gq + j.dr) / (q + j.value) - j.dr * j.dr / j.value), 1e-15);
    EXPECT_THROW(nonlinear_G(-10.0, 0.0, 2.0, 10.0, p), SolverError);
}

TEST(SimSolver, ResidualDecaysLikeOneOverS) {
    SimParams p;
    const double r20 = 20.0 * residual_sup(20.0, p);
    for (double s : {10.0, 40.0, 160.0, 640.0}) EXPECT_LE(s * residual_sup(s, p), 1.2 * r20);
}

TEST(SimSolver, LinearOperatorEigenfunctions) {
    // (Delta - y/2 d/dy + 1) h_n = (1 - n/2) h_n, exactly for n <= 2
    const YGrid g = YGrid::make(10.0, 0.05, 1);
    std::vector<double> h0(g.size(), 1.0), h1(g.size()), h2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        h1[i] = g.y[i];
        h2[i] = g.y[i] * g.y[i] - 2.0;
    }
    const auto l0 = apply_L(g, h0), l1 = apply_L(g, h1), l2 = apply_L(g, h2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(l0[i], h0[i], 1e-9);
        EXPECT_NEAR(l1[i], 0.5 * h1[i], 1e-9);
        EXPECT_NEAR(l2[i], 0.0, 1e-8);
    }
}

TEST(SimSolver, LinearOperatorSecondOrder) {
    std::vector<double> err;
    for (double dy : {0.1, 0.05}) {
        const YGrid g = YGrid::make(10.0, dy, 1);
        std::vector<double> h(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) h[i] = std::pow(g.y[i], 4) - 12 * g.y[i] * g.y[i] + 12;
        const auto l = apply_L(g, h);
        double e = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (std::abs(g.y[i]) < 4) e = std::max(e, std::abs(l[i] + h[i]));
        err.push_back(e);
    }
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.6);
}

TEST(SimSolver, ConstantStateFollowsScalarOde) {
    SimParams p;
    SolverConfig cfg;
    cfg.y_max = 35.0;
    for (double c : {-0.5, 0.3}) {
        const double closed = -std::log(1.0 - (1.0 - std::exp(-c)) * std::exp(1.0));
        EXPECT_NEAR(ode_rk4(c, 10.0, 11.0), closed, 1e-10);
        std::vector<double> err;
        for (double ds : {0.02, 0.01}) {
            cfg.ds = ds;
            SimSolver solver = SimSolver::for_horizon(11.0, cfg, p);
            const SimTrajectory tr = solver.evolve(constant_field(solver.grid(), c, 10.0), 11.0, 0.5);
            ASSERT_EQ(tr.status, RunStatus::ok);
            for (double w : tr.last.w) EXPECT_NEAR(w, tr.last.w[0], 1e-12);
            err.push_back(std::abs(tr.last.w[0] - closed));
        }
        EXPECT_LT(err[1], 2e-4);
        EXPECT_NEAR(err[0] / err[1], 4.0, 0.8) << err[0] << " " << err[1];
    }
}

TEST(SimSolver, ConstantStateRadial) {
    SimParams p;
    p.dim = 3;
    SolverConfig cfg;
    cfg.y_max = 35.0;
    SimSolver solver = SimSolver::for_horizon(11.0, cfg, p);
    const SimTrajectory tr = solver.evolve(constant_field(solver.grid(), -0.5, 10.0), 11.0, 0.5);
    const double closed = -std::log(1.0 - (1.0 - std::exp(0.5)) * std::exp(1.0));
    for (double w : tr.last.w) EXPECT_NEAR(w, closed, 1e-4);
}

TEST(SimSolver, FormulationsAndSchemesAgree) {
    SimParams p;
    InitialDataSpec spec;
    spec.d0 = 0.5;
    spec.d1 = {-0.3};
    auto run = [&](Scheme sch, Formulation f) {
        SolverConfig cfg;
        cfg.scheme = sch;
        cfg.formulation = f;
        SimSolver solver = SimSolver::for_horizon(11.0, cfg, p);
        return solver.evolve(build_initial_W(spec, solver.grid()), 11.0, 0.5).last.w;
    };
    const auto a = run(Scheme::semi_implicit_CN, Formulation::W_equation);
    const auto b = run(Scheme::semi_implicit_CN, Formulation::Q_equation);
    const auto c = run(Scheme::explicit_RK2, Formulation::W_equation);
    const YGrid g = YGrid::make(SolverConfig{}.y_max_for(11.0, p), 0.05, 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(g.y[i]) > 20.0) continue;
        EXPECT_NEAR(a[i], b[i], 2e-3);
        EXPECT_NEAR(a[i], c[i], 2e-3);
    }
}

TEST(SimSolver, AutonomousInS) {
    // W-equation has no explicit s: shifting s0 by 2 ln(lambda) shifts the solution
    SimParams p;
    SolverConfig cfg;
    cfg.y_max = 40.0;
    std::vector<double> w0;
    const YGrid g = YGrid::make(40.0, 0.05, 1);
    for (double y : g.y) w0.push_back(-std::log1p(y * y / 80.0) + 0.01 * std::exp(-y * y));
    SimSolver a(g, cfg, p), b(g, cfg, p);
    const double shift = 2.0 * std::log(2.0);
    const auto ta = a.evolve({g.y, w0, 10.0}, 11.0, 1.0);
    const auto tb = b.evolve({g.y, w0, 10.0 + shift}, 11.0 + shift, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(ta.last.w[i], tb.last.w[i], 1e-10);
}

TEST(SimSolver, BlowupGuardStopsTheRun) {
    SimParams p;
    SolverConfig cfg;
    cfg.y_max = 35.0;
    SimSolver solver = SimSolver::for_horizon(11.0, cfg, p);
    SimilarityField st = constant_field(solver.grid(), 60.0, 10.0);
    EXPECT_EQ(solver.step(st, 0.01), RunStatus::blowup);
    const SimTrajectory tr = solver.evolve(constant_field(solver.grid(), 2.0, 10.0), 11.0, 0.1);
    EXPECT_EQ(tr.status, RunStatus::blowup);
    EXPECT_LT(tr.s_last, 11.0);
}

TEST(SimSolver, SnapshotOnTheProfile) {
    SimParams p;
    SolverConfig cfg;
    SimSolver solver = SimSolver::for_horizon(20.0, cfg, p);
    const double s = 20.0;
    SimilarityField st{solver.grid().y, {}, s};
    for (double y : st.y) st.w.push_back(std::log(psi_alpha(std::abs(y), s, p)));
    const SimSnapshot sn = solver.snapshot(st);
    EXPECT_NEAR(sn.q0, 0.0, 1e-14);
    EXPECT_NEAR(sn.sup_qe, 0.0, 1e-14);
    // psi - e^Phi = (e^{b/s} - 1) e^Phi peaks at y = 0
    EXPECT_NEAR(sn.prof_err_value, std::expm1(0.25 / s), 1e-12);
    EXPECT_NEAR(sn.w_center, 0.25 / s, 1e-15);
}

TEST(SimSolver, ConfigValidation) {
    SolverConfig c;
    c.dy = 0.1;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.cfl_safety = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    SimParams p;
    EXPECT_NEAR(SolverConfig{}.y_max_for(30.0, p), 1.1 * 10.0 * std::sqrt(30.0), 1e-12);
    SimParams q;
    q.dim = 2;
    EXPECT_THROW(SimSolver(YGrid::make(10, 0.05, 1), SolverConfig{}, q), ValidationError);
}

TEST(SimSolver, EvolveIsDeterministic) {
    SimParams p;
    InitialDataSpec spec;
    spec.d0 = 0.2;
    spec.d1 = {0.1};
    auto run = [&] {
        SimSolver solver = SimSolver::for_horizon(11.0, SolverConfig{}, p);
        return solver.evolve(build_initial_W(spec, solver.grid()), 11.0, 0.25).last.w;
    };
    EXPECT_EQ(run(), run());
}
