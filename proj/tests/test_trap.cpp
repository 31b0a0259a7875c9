#include <gtest/gtest.h>

#include <cmath>

#include <blowup/trap.hpp>

using namespace blowup;

namespace {

ModeDecomposition zero_modes(const YGrid& g, double s) {
    ModeDecomposition md;
    md.s = s;
    md.q1 = {0.0};
    md.q2 = {0.0};
    md.q_minus.assign(g.size(), 0.0);
    md.grad_q_perp.assign(g.size(), 0.0);
    md.q_e.assign(g.size(), 0.0);
    return md;
}

}  // namespace

TEST(Trap, ZeroModesHaveFullMargins) {
    SimParams p;
    const double s = 16.0;
    const YGrid g = YGrid::make(45.0, 0.05, 1);
    const TrapReport r = check_D1(zero_modes(g, s), g, s, p);
    EXPECT_TRUE(r.in_set);
    EXPECT_FALSE(r.first_violation);
    EXPECT_DOUBLE_EQ(r.margin(Constraint::Q0), 20.0 / 256.0);
    EXPECT_DOUBLE_EQ(r.margin(Constraint::Q2), 400.0 * std::log(16.0) / 256.0);
    EXPECT_DOUBLE_EQ(r.margin(Constraint::Qe), 400.0 / 4.0);
    EXPECT_THROW(check_D1(zero_modes(g, 2.0), g, 2.0, p), DomainError);
}

TEST(Trap, FirstViolationFollowsCheckOrder) {
    SimParams p;
    const double s = 10.0;
    const YGrid g = YGrid::make(35.0, 0.05, 1);
    ModeDecomposition md = zero_modes(g, s);
    md.q0 = -0.25;  // bound 0.2
    md.q_e.assign(g.size(), 1e3);
    const TrapReport r = check_D1(md, g, s, p);
    EXPECT_FALSE(r.in_set);
    ASSERT_TRUE(r.first_violation);
    EXPECT_EQ(*r.first_violation, Constraint::Q0);
    EXPECT_NEAR(r.margin(Constraint::Q0), -0.05, 1e-15);
    EXPECT_LT(r.margin(Constraint::Qe), 0.0);
}

TEST(Trap, WeightedSupIgnoresOuterNodes) {
    SimParams p;
    const double s = 1.0;  // inner radius 10
    const YGrid g = YGrid::make(20.0, 0.5, 1);
    std::vector<double> f(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g.y[i] - 2.0) < 1e-12) f[i] = -9.0;
        if (g.y[i] > 15.0) f[i] = 1e6;
    }
    EXPECT_DOUBLE_EQ(weighted_sup(g, f, s, p), 1.0);
}

TEST(Trap, BoxMembership) {
    const BoxTest in = in_hat_VA(0.1, {-0.2}, 10.0, 20.0);
    EXPECT_TRUE(in.inside);
    ASSERT_EQ(in.margins.size(), 2u);
    EXPECT_NEAR(in.margins[1], 0.0, 1e-15);
    EXPECT_FALSE(in_hat_VA(0.0, {0.21}, 10.0, 20.0).inside);
    EXPECT_THROW(in_hat_VA(0.0, {}, 0.0, 1.0), DomainError);
}

TEST(Trap, VanDerCorput) {
    EXPECT_EQ(van_der_corput(0), 0.0);
    EXPECT_EQ(van_der_corput(1), 0.5);
    EXPECT_EQ(van_der_corput(2), 0.25);
    EXPECT_EQ(van_der_corput(3), 0.75);
    EXPECT_EQ(van_der_corput(5), 0.625);
}

TEST(Trap, D3UnchangedFieldHasFullMargin) {
    SimParams p;
    PhysicalField u{{0.0, 0.1, 0.2, 0.3, 0.4}, {1, 2, 3, 4, 5}, 0.0};
    const TrapReport r = check_D3(u, u, p);
    EXPECT_DOUBLE_EQ(r.margin(Constraint::D3_value), p.eta0);
    EXPECT_DOUBLE_EQ(r.margin(Constraint::D3_grad), p.eta0);
    PhysicalField v = u;
    for (std::size_t i = 0; i < v.u.size(); ++i) v.u[i] += 0.5 * v.x[i];  // drift 0.5 x, slope 0.5
    const TrapReport q = check_D3(v, u, p);
    EXPECT_NEAR(q.margin(Constraint::D3_value), p.eta0 - 0.2, 1e-14);
    EXPECT_NEAR(q.margin(Constraint::D3_grad), p.eta0 - 0.5, 1e-12);
    EXPECT_EQ(*q.first_violation, Constraint::D3_value);
    PhysicalField w = u;
    w.x[1] = 0.11;
    EXPECT_THROW(check_D3(w, u, p), DomainError);
}

TEST(Trap, MergeAndCheckAll) {
    SimParams p;
    TrapReport a, b;
    a.margins[Constraint::Q1] = 1.0;
    b.margins[Constraint::D3_grad] = -1.0;
    a.merge(b);
    EXPECT_FALSE(a.in_set);
    EXPECT_EQ(*a.first_violation, Constraint::D3_grad);
    EXPECT_EQ(a.margins.size(), 2u);
    EXPECT_TRUE(check_all({}, p).in_set);
}

TEST(Trap, NamesRoundTrip) {
    for (int k = 0; k <= static_cast<int>(Constraint::D3_grad); ++k) {
        const auto c = static_cast<Constraint>(k);
        EXPECT_EQ(constraint_from_string(to_string(c)), c);
    }
    EXPECT_FALSE(constraint_from_string("Q3"));
}

TEST(Trap, D2OnTheSelfSimilarWindow) {
    // spatially flat frames: the Hessian margin is the full bound up to interpolation noise
    SimParams p;
    PhysTrajectory tr;
    tr.grid = PhysGrid::uniform(1, 1.0, 0.001);
    for (double t : {0.0, 0.5, 0.9, 0.99, 0.999}) {
        PhysFrame f{t, std::vector<double>(tr.grid.size(), -std::log(1.0 - t))};
        tr.frames.push_back(f);
    }
    const TrapReport r = check_D2(tr, 0.999, p);
    EXPECT_TRUE(std::isfinite(r.margin(Constraint::D2_value)));
    EXPECT_NEAR(r.margin(Constraint::D2_hess), p.C0prime, 1e-8);
    EXPECT_THROW(check_D2(tr, 1.0, p), DomainError);
}
