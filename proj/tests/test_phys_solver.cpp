#include <gtest/gtest.h>

#include <cmath>

#include <blowup/phys_solver.hpp>

using namespace blowup;

namespace {

PhysicalField field_on(const PhysGrid& g, double t, const std::function<double(double)>& f) {
    PhysicalField u{g.x, {}, t};
    for (double x : g.x) u.u.push_back(f(x));
    return u;
}

/// Trajectory with frames U(x, t) = x^2 + t at the given times.
PhysTrajectory synthetic(const std::vector<double>& times) {
    PhysTrajectory tr;
    tr.grid = PhysGrid::uniform(1, 2.0, 0.01);
    for (double t : times) {
        PhysFrame f{t, {}};
        for (double x : tr.grid.x) f.u.push_back(x * x + t);
        tr.frames.push_back(f);
    }
    return tr;
}

}  // namespace

TEST(PhysGrid, LogUniformLayout) {
    const PhysGrid g = PhysGrid::log_uniform(1);
    EXPECT_TRUE(g.half_line);
    EXPECT_EQ(g.x.front(), 0.0);
    EXPECT_NEAR(g.x.back(), 4.0, 1e-12);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g.x[i], g.x[i - 1]);
    EXPECT_NEAR(g.x[1], 1e-6, 1e-18);
    EXPECT_GT(g.size(), 2000u);
    EXPECT_LT(g.size(), 3000u);
}

TEST(PhysGrid, UniformAndMirrored) {
    EXPECT_THROW(PhysGrid::uniform(1, 1.0, 0.3), DomainError);
    const PhysGrid h = PhysGrid::uniform(1, 1.0, 0.25);
    ASSERT_EQ(h.size(), 5u);
    const PhysGrid m = PhysGrid::mirrored(h);
    EXPECT_FALSE(m.half_line);
    ASSERT_EQ(m.size(), 9u);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m.x[i], -m.x[m.size() - 1 - i], 1e-15);
}

TEST(PhysSolver, SpatiallyConstantDataFollowsOde) {
    SimParams p;
    PhysConfig cfg;
    cfg.far = FarBoundary::zero_flux;
    const PhysSolver solver(PhysGrid::uniform(1, 4.0, 0.05), cfg, p);
    const double c = 0.0;
    std::vector<double> ts, us;
    const PhysTrajectory tr = solver.evolve(field_on(solver.grid(), 0.0, [&](double) { return c; }), 0.9);
    ASSERT_EQ(tr.status, RunStatus::ok);
    for (const auto& f : tr.frames) EXPECT_NEAR(f.u[0], -std::log(std::exp(-c) - f.t), 1e-4);
}

TEST(PhysSolver, HeatMassConserved) {
    SimParams p;
    p.alpha = 0.0;
    PhysConfig cfg;
    cfg.reaction = false;
    cfg.far = FarBoundary::zero_flux;
    const PhysSolver solver(PhysGrid::uniform(1, 6.0, 0.02), cfg, p);
    const auto init = field_on(solver.grid(), 0.0, [](double x) { return std::exp(-x * x); });
    auto mass = [&](const std::vector<double>& u) {
        double m = 0;
        const double h = 0.02;
        for (std::size_t i = 0; i < u.size(); ++i) m += (i == 0 || i + 1 == u.size() ? 0.5 : 1.0) * h * u[i];
        return m;
    };
    const PhysTrajectory tr = solver.evolve(init, 0.5);
    EXPECT_NEAR(mass(tr.frames.back().u), mass(init.u), 1e-10);
}

TEST(PhysSolver, ScalingCovarianceSecondOrder) {
    auto u0 = [](double x) { return -std::log1p(x * x) + 0.5 * std::exp(-x * x); };
    const double lam = 2.0, t = 0.05;
    std::vector<double> disc;
    for (double h : {0.02, 0.01}) {
        SimParams pa, pb;
        pb.a_far = lam * lam;
        PhysConfig ca, cb;
        ca.dt_base = 0.5 * h;
        cb.dt_base = ca.dt_base / (lam * lam);
        const PhysSolver A(PhysGrid::uniform(1, 8.0, h), ca, pa), B(PhysGrid::uniform(1, 8.0, h), cb, pb);
        const auto ta = A.evolve(field_on(A.grid(), 0.0, u0), t);
        const auto tb = B.evolve(field_on(B.grid(), 0.0, [&](double x) { return 2 * std::log(lam) + u0(lam * x); }), t / (lam * lam));
        double d = 0;
        for (std::size_t i = 0; i < B.grid().size() && B.grid().x[i] <= 1.0; ++i)
            d = std::max(d, std::abs(tb.frames.back().u[i] - 2 * std::log(lam) - cubic_interp(A.grid().x, ta.frames.back().u, lam * B.grid().x[i]).v));
        disc.push_back(d);
    }
    EXPECT_GT(std::log2(disc[0] / disc[1]), 1.8);
}

TEST(PhysSolver, BlowupGuard) {
    SimParams p;
    const PhysSolver solver(PhysGrid::uniform(1, 4.0, 0.05), PhysConfig{}, p);
    const auto tr = solver.evolve(field_on(solver.grid(), 0.0, [](double x) { return 3.0 - x * x; }), 1.0 - 1e-6);
    EXPECT_EQ(tr.status, RunStatus::blowup);
}

TEST(PhysSolver, ObserverStopsRun) {
    SimParams p;
    const PhysSolver solver(PhysGrid::uniform(1, 4.0, 0.05), PhysConfig{}, p);
    int calls = 0;
    const auto tr = solver.evolve(field_on(solver.grid(), 0.0, [](double x) { return -std::log1p(x * x); }), 0.5,
                                  [&](const PhysicalField&) { return ++calls < 3; });
    EXPECT_EQ(tr.status, RunStatus::stopped);
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(tr.frames.size(), 4u);
}

TEST(PhysSolver, InputChecks) {
    SimParams p;
    const PhysSolver solver(PhysGrid::uniform(1, 4.0, 0.05), PhysConfig{}, p);
    const auto u = field_on(solver.grid(), 0.0, [](double) { return 0.0; });
    EXPECT_THROW(solver.evolve(u, 1.0), DomainError);
    EXPECT_THROW(solver.evolve(PhysicalField{{0.0}, {0.0}, 0.0}, 0.5), DomainError);
}

TEST(Interpolation, CubicIsExactOnCubics) {
    std::vector<double> xs, f;
    for (int i = 0; i <= 20; ++i) {
        const double x = 0.1 * i * i / 20.0;
        xs.push_back(x);
        f.push_back(2 * x * x * x - x + 1);
    }
    for (double x : {0.013, 0.5, 1.7}) {
        const Jet3 j = cubic_interp(xs, f, x);
        EXPECT_NEAR(j.v, 2 * x * x * x - x + 1, 1e-12);
        EXPECT_NEAR(j.d1, 6 * x * x - 1, 1e-10);
        EXPECT_NEAR(j.d2, 12 * x, 1e-8);
    }
}

TEST(Interpolation, TrajectorySamplingEvenExtension) {
    const PhysTrajectory tr = synthetic({0.0, 0.5, 0.9});
    const Jet3 a = sample_trajectory(tr, 0.3, 0.7);
    EXPECT_NEAR(a.v, 0.09 + 0.7, 1e-12);
    const Jet3 b = sample_trajectory(tr, -0.3, 0.7);
    EXPECT_NEAR(b.v, a.v, 1e-12);
    EXPECT_NEAR(b.d1, -a.d1, 1e-12);
    EXPECT_THROW(sample_trajectory(tr, 0.3, 0.95), DomainError);
    EXPECT_THROW(sample_trajectory(tr, 3.0, 0.5), DomainError);
}

TEST(Window, ConsistencyAtCenter) {
    SimParams p;
    const PhysTrajectory tr = synthetic({0.0, 0.5, 0.99, 1.0 - 1e-9});
    const double x0 = 0.1;
    const TimeOfX tx = t_of_x(x0, p);
    const double t = 0.99;
    const double tau = (t - tx.t) / tx.theta;
    const WindowField w = window_extract(tr, x0, tau, {0.0, 0.5}, p);
    EXPECT_NEAR(w.values[0], std::log(tx.theta) + x0 * x0 + t, 1e-9);
    // U_xi = sqrt(theta) * 2x
    const double x1 = x0 + 0.5 * std::sqrt(tx.theta);
    EXPECT_NEAR(w.grad[1], std::sqrt(tx.theta) * 2 * x1, 1e-9);
    EXPECT_NEAR(w.hess[1], tx.theta * 2, 1e-7);
    const auto [lo, hi] = window_tau_range(tr, x0, p);
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
}

TEST(Window, MonitorReferenceValues) {
    // U = -ln(1 - tau): monitor = 1; constant c at tau = 0: e^c
    std::vector<WindowField> ws;
    for (double tau : {0.0, 0.5, 0.9, 0.999}) {
        WindowField w;
        w.tau = tau;
        w.xi = {-1, 0, 1};
        w.values.assign(3, -std::log(1 - tau));
        w.grad.assign(3, 0.0);
        ws.push_back(w);
    }
    EXPECT_NEAR(no_blowup_monitor(ws), 1.0, 1e-12);
    WindowField c;
    c.tau = 0.0;
    c.xi = {0};
    c.values = {-0.7};
    c.grad = {0.0};
    EXPECT_NEAR(no_blowup_monitor({c}), std::exp(-0.7), 1e-15);
}

TEST(FinalProfileExtract, GradientAndCauchy) {
    SimParams p;
    PhysTrajectory tr = synthetic({0.0, 0.5, 0.99});
    tr.frames.back().u = tr.frames[1].u;  // no change between last two frames
    const FinalProfile fp = final_profile_extract(tr, p, 0.1);
    EXPECT_EQ(fp.t_prev, 0.5);
    EXPECT_NEAR(fp.cauchy_diff, 0.0, 1e-15);
    for (std::size_t i = 0; i < fp.x.size(); i += 37) {
        EXPECT_NEAR(fp.grad[i], 2 * fp.x[i], 1e-10);
        EXPECT_NEAR(fp.x_grad[i], 2 * fp.x[i] * fp.x[i], 1e-10);
    }
}
