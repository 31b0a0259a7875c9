#include <gtest/gtest.h>

#include <cmath>

#include <blowup/reduced_ode.hpp>

using namespace blowup;

TEST(ReducedOde, RightHandSide) {
    SimParams p;  // alpha = 1, N = 1
    auto [a, b] = rhs_w0w2(0.2, -0.1, p);
    EXPECT_NEAR(a, 0.2 + 0.02 + 12.0 * 0.01, 1e-15);
    EXPECT_NEAR(b, -0.02 + 8.0 * 0.01, 1e-15);
}

TEST(ReducedOde, DecoupledW0MatchesClosedForm) {
    // W2 = 0 keeps W2 = 0; W0' = W0 + W0^2/2, so 1/W0 = (1/w + 1/2) e^{-(s-s0)} - 1/2
    SimParams p;
    const double w = 1e-3;
    const ModeTrajectory tr = integrate_modes(w, 0.0, 10.0, 14.0, p);
    ASSERT_FALSE(tr.diverged);
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        const double z = (1.0 / w + 0.5) * std::exp(-(tr.s[k] - 10.0)) - 0.5;
        EXPECT_NEAR(tr.w0[k], 1.0 / z, 1e-9);
        EXPECT_EQ(tr.w2[k], 0.0);
    }
}

TEST(ReducedOde, DivergenceIsFlagged) {
    SimParams p;
    const ModeTrajectory tr = integrate_modes(0.5, 0.0, 10.0, 100.0, p);
    EXPECT_TRUE(tr.diverged);
    EXPECT_LT(tr.diverged_at, 20.0);
}

TEST(ReducedOde, ArgumentChecks) {
    SimParams p;
    EXPECT_THROW(integrate_modes(0, 0, 0.5, 2.0, p), DomainError);
    EXPECT_THROW(integrate_modes(0, 0, 10.0, 5.0, p), DomainError);
    EXPECT_THROW(integrate_modes_bounded(0.1, 10.0, 100.0, p), DomainError);
}

TEST(ReducedOde, BoundedBranchFollowsOneOverS) {
    for (double a : {0.0, 1.0}) {
        SimParams p;
        p.alpha = a;
        const double c4 = 4.0 + 4.0 * a;
        const ModeTrajectory tr = integrate_modes_bounded(-1.0 / (c4 * 10.0), 10.0, 1000.0, p);
        EXPECT_NEAR(tr.w2.front(), -1.0 / (c4 * 10.0), 1e-9);
        EXPECT_NEAR(tr.s.back() * tr.w2.back() * c4, -1.0, 0.02);
        for (std::size_t k = 0; k < tr.s.size(); ++k)
            if (tr.s[k] >= 100.0) {
                EXPECT_LT(tr.s[k] * tr.s[k] * std::abs(tr.w0[k]), 1.0);
            }
    }
}

TEST(ReducedOde, W1StartsAtRegularValueAndSolvesItsEquation) {
    for (int N : {1, 2, 3})
        for (double a : {0.0, 1.0}) {
            SimParams p;
            p.dim = N;
            p.alpha = a;
            const W1Profile w = solve_w1_radial(20.0, p, 801);
            EXPECT_EQ(w.w1[0], N / (2.0 + 2.0 * a));
            EXPECT_LT(w.max_residual, 1e-8);
            // derivative consistent with the values (fourth-order centered differences)
            const double h = w.z[1] - w.z[0];
            for (std::size_t k = 2; k + 2 < w.z.size(); k += 50) {
                const double fd = (w.w1[k - 2] - 8 * w.w1[k - 1] + 8 * w.w1[k + 1] - w.w1[k + 2]) / (12 * h);
                EXPECT_NEAR(w.dw1[k], fd, 1e-7);
            }
        }
}

TEST(ReducedOde, W1HomogeneousPartIsFree) {
    SimParams p;
    const W1Profile a = solve_w1_radial(10.0, p, 101, 0.0), b = solve_w1_radial(10.0, p, 101, 0.3);
    EXPECT_LT(b.max_residual, 1e-8);
    // difference is 0.3 z^2 / D
    const double c = p.c_profile();
    for (std::size_t k = 0; k < a.z.size(); ++k) {
        const double z = a.z[k];
        EXPECT_NEAR(b.w1[k] - a.w1[k], 0.3 * z * z / (1 + c * z * z), 1e-9);
    }
}

TEST(ReducedOde, ModeOdeResidualsVanishOnExactSolutions) {
    SimParams p;
    std::vector<ModeSample> m;
    for (int k = 0; k <= 200; ++k) {
        const double s = 10.0 + 0.05 * k;
        m.push_back({s, 1e-12 * std::exp(s - 10.0), 1e-12 * std::exp(0.5 * (s - 10.0)), 0.3 / (s * s)});
    }
    const ModeOdeReport r = check_mode_odes(m, p);
    EXPECT_EQ(r.s.size(), m.size() - 2);
    EXPECT_LT(r.sup_r0, 1e-5);
    EXPECT_LT(r.sup_r1, 1e-5);
    EXPECT_LT(r.sup_r2, 1e-4);
    EXPECT_THROW(check_mode_odes({m[0], m[1]}, p), DomainError);
}

TEST(ReducedOde, LogLogSlope) {
    std::vector<double> s, v;
    for (double x = 10; x <= 30; x += 1) {
        s.push_back(x);
        v.push_back(3.0 * std::pow(x, -0.5));
    }
    EXPECT_NEAR(loglog_slope(s, v), -0.5, 1e-12);
    v[3] = 0.0;  // skipped
    EXPECT_NEAR(loglog_slope(s, v), -0.5, 1e-12);
    EXPECT_TRUE(std::isnan(loglog_slope({1.0}, {1.0})));
}
