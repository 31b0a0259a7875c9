#include <gtest/gtest.h>

#include <cmath>

#include <blowup/profiles.hpp>

using namespace blowup;

TEST(Profiles, PhiAtOriginIsZero) {
    for (double a : {-0.5, 0.0, 1.0, 3.0}) EXPECT_EQ(phi_alpha(0.0, a), 0.0);
}

TEST(Profiles, PhiMatchesLogForm) {
    // e^Phi = (4+4a)/(4+4a+z^2)
    for (double a : {-0.5, 0.0, 1.0})
        for (double z : {0.3, 2.0, 17.0}) EXPECT_NEAR(std::exp(phi_alpha(z, a)), (4 + 4 * a) / (4 + 4 * a + z * z), 1e-15);
}

TEST(Profiles, ProfileIdentityHolds) {
    for (double a : {-0.5, 0.0, 1.0, 3.0})
        for (double z = 0.0; z <= 100.0; z += 0.37) {
            EXPECT_NEAR(-0.5 * z * phi_alpha_prime(z, a) + std::exp(phi_alpha(z, a)) - 1.0, 0.0, 1e-13);
        }
}

TEST(Profiles, PhiPrimeMatchesFiniteDifference) {
    const double h = 1e-5;
    for (double a : {0.0, 1.0})
        for (double z : {0.1, 1.0, 5.0, 20.0}) {
            const double fd = (phi_alpha(z + h, a) - phi_alpha(z - h, a)) / (2 * h);
            EXPECT_NEAR(phi_alpha_prime(z, a), fd, 1e-8);
        }
}

TEST(Profiles, AlphaAtOrBelowMinusOneRejected) {
    EXPECT_THROW(phi_alpha(1.0, -1.0), DomainError);
    EXPECT_THROW(phi_alpha_prime(1.0, -2.0), DomainError);
    EXPECT_THROW(final_profile(0.1, -1.0), DomainError);
}

TEST(Profiles, PsiAtOriginIsExpOfCorrection) {
    SimParams p;
    for (int N : {1, 2, 3}) {
        p.dim = N;
        EXPECT_NEAR(psi_alpha(0.0, 10.0, p), std::exp(N / (2.0 + 2.0 * p.alpha) / 10.0), 1e-15);
    }
    EXPECT_THROW(psi_alpha(0.0, 0.0, p), DomainError);
}

TEST(Profiles, PsiJetMatchesFiniteDifferences) {
    SimParams p;
    for (int N : {1, 3}) {
        p.dim = N;
        for (double r : {0.5, 3.0, 12.0})
            for (double s : {10.0, 40.0}) {
                const PsiJet j = psi_jet(r, s, p);
                const double h = 1e-4 * std::max(1.0, r), hs = 1e-4 * s;
                auto f = [&](double rr, double ss) { return psi_alpha(rr, ss, p); };
                EXPECT_NEAR(j.value, f(r, s), 1e-15);
                EXPECT_NEAR(j.ds, (f(r, s + hs) - f(r, s - hs)) / (2 * hs), 1e-9);
                const double dr = (f(r + h, s) - f(r - h, s)) / (2 * h);
                EXPECT_NEAR(j.dr, dr, 1e-8);
                const double drr = (f(r + h, s) - 2 * f(r, s) + f(r - h, s)) / (h * h);
                EXPECT_NEAR(j.lap, drr + (N - 1) * dr / r, 1e-5);
            }
    }
}

TEST(Profiles, SimilarityRoundTrip) {
    SimParams p;
    PhysicalField u{{-0.1, 0.0, 0.05, 0.2}, {1.0, 2.0, 1.5, 0.3}, 1.0 - std::exp(-12.0)};
    const SimilarityField w = to_similarity(u, p, 0.01);
    EXPECT_NEAR(w.s, 12.0, 1e-10);  // 1 - t loses digits
    EXPECT_NEAR(w.y[1], (0.0 - 0.01) * std::exp(6.0), 1e-9);
    EXPECT_NEAR(w.w[2], 1.5 - 12.0, 1e-10);
    const PhysicalField back = from_similarity(w, p, 0.01);
    for (std::size_t i = 0; i < u.x.size(); ++i) {
        EXPECT_NEAR(back.x[i], u.x[i], 1e-14);
        EXPECT_NEAR(back.u[i], u.u[i], 1e-12);
    }
    EXPECT_NEAR(back.t, u.t, 1e-15);
    u.t = 1.0;
    EXPECT_THROW(to_similarity(u, p), DomainError);
}

TEST(Profiles, QVanishesOnTheProfile) {
    SimParams p;
    SimilarityField w{{-3.0, 0.0, 2.0, 40.0}, {}, 15.0};
    for (double y : w.y) w.w.push_back(std::log(psi_alpha(std::abs(y), w.s, p)));
    for (double q : q_from_w(w, p)) EXPECT_NEAR(q, 0.0, 1e-15);
}

TEST(Profiles, HatUEndpoints) {
    SimParams p;
    EXPECT_NEAR(hat_u(0.0, p), -std::log(1.0 + 25.0 / 16.0 / 8.0), 1e-15);
    EXPECT_NEAR(hat_u(1.0, p), -std::log(25.0 / 128.0), 1e-15);
}

TEST(Profiles, TimeOfXSolvesItsEquation) {
    SimParams p;
    for (double x : {1e-4, 1e-2, 0.1, 0.2}) {
        const TimeOfX tx = t_of_x(x, p);
        EXPECT_NEAR(0.25 * p.K0 * std::sqrt(tx.theta * std::abs(std::log(tx.theta))), x, 1e-10 * x);
        EXPECT_NEAR(tx.t, p.T - tx.theta, 1e-15);
        EXPECT_LT(tx.theta, std::exp(-1.0));
    }
    EXPECT_THROW(t_of_x(0.0, p), DomainError);
    EXPECT_THROW(t_of_x(10.0, p), DomainError);
}

TEST(Profiles, FinalProfileValues) {
    // x = 1/e: ln(16 e^2) for alpha = 1
    EXPECT_NEAR(final_profile(std::exp(-1.0), 1.0), std::log(16.0) + 2.0, 1e-14);
    EXPECT_NEAR(final_profile(0.01, 0.0), std::log(8.0 * std::log(100.0) * 1e4), 1e-12);
    EXPECT_THROW(final_profile(1.0, 1.0), DomainError);
    EXPECT_THROW(final_profile(0.0, 1.0), DomainError);
}
