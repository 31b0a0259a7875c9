#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <vector>

#include "grid.hpp"
#include "params.hpp"

namespace blowup {

/// h_n(y) = sum_i n!/(i!(n-2i)!) (-1)^i y^(n-2i); norm^2 = 2^n n! under rho.
inline double hermite_poly(int n, double y) {
    if (n < 0) throw DomainError("hermite_poly needs n >= 0");
    double sum = 0.0;
    for (int i = 0; 2 * i <= n; ++i) {
        const double coef = std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - 2.0 * i + 1.0));
        sum += ((i % 2) ? -coef : coef) * std::pow(y, n - 2 * i);
    }
    return sum;
}

/// (4 pi)^(-N/2) exp(-|y|^2/4)
inline double rho_weight(double y_norm, int dim) {
    return std::pow(4.0 * std::numbers::pi, -0.5 * dim) * std::exp(-0.25 * y_norm * y_norm);
}

/// Smooth bump: 1 on [0,1], 0 on [2,inf), glued with e^(-1/t).
inline double chi0(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    auto f = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
    const double a = f(2.0 - t), b = f(t - 1.0);
    return a / (a + b);
}

inline double chi_cutoff(double y_norm, double s, double K0) {
    return chi0(y_norm / (K0 * std::sqrt(s)));
}

inline double sphere_area(int dim) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

struct GaussRule {
    std::vector<double> nodes, weights;
};

/// Gauss-Hermite rule for the weight e^(-u^2) (Golub-Welsch).
inline GaussRule gauss_hermite(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    GaussRule r;
    for (int k = 0; k < n; ++k) {
        r.nodes.push_back(es.eigenvalues()[k]);
        const double v = es.eigenvectors()(0, k);
        r.weights.push_back(std::sqrt(std::numbers::pi) * v * v);
    }
    return r;
}

struct InnerResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool coverage_ok = true;  // false: grid does not reach |y| = 12
};

/// Composite trapezoid against rho on a YGrid. Weights include rho and,
/// in radial mode, the surface factor |S^(N-1)| r^(N-1).
class RhoQuadrature {
public:
    explicit RhoQuadrature(const YGrid& g) : grid_(g) {
        const std::size_t n = g.size();
        w_.resize(n);
        const double area = g.radial() ? sphere_area(g.dim) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g.y[i];
            double w = g.dy * rho_weight(std::abs(r), g.dim);
            if (g.radial()) w *= area * std::pow(r, g.dim - 1);
            if (i == n - 1 || (i == 0)) w *= 0.5;
            w_[i] = w;
        }
        // endpoint correction at r=0 for N=2, where (r f rho)' does not vanish
        if (g.dim == 2) w_[0] += g.dy * g.dy / 12.0 * area * rho_weight(0.0, 2);
        coverage_ok_ = g.extent() >= 12.0;
        crosscheck_ = compute_crosscheck();
    }

    const YGrid& grid() const { return grid_; }
    const std::vector<double>& weights() const { return w_; }
    bool coverage_ok() const { return coverage_ok_; }
    /// max |trapezoid - reference| over h_n h_m (n,m <= 5); reference is
    /// Gauss-Hermite in 1D, closed-form Gaussian moments in radial mode.
    double crosscheck_error() const { return crosscheck_; }

    template <std::invocable<std::size_t> F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) acc += w_[i] * f(i);
        return acc;
    }

    double integrate(const std::vector<double>& f) const {
        return integrate([&](std::size_t i) { return f[i]; });
    }

    InnerResult inner(const std::vector<double>& f, const std::vector<double>& g) const {
        InnerResult r;
        r.value = integrate([&](std::size_t i) { return f[i] * g[i]; });
        // same rule on every other node
        double coarse = 0.0;
        const std::size_t n = w_.size(), mid = grid_.radial() ? 0 : n / 2;
        for (std::size_t i = 0; i < n; ++i) {
            if ((i > mid ? i - mid : mid - i) % 2) continue;
            coarse += 2.0 * w_[i] * f[i] * g[i];
        }
        if (grid_.dim == 2) coarse += 2.0 * grid_.dy * grid_.dy / 12.0 * sphere_area(2) * rho_weight(0.0, 2) * f[0] * g[0];
        r.error_estimate = std::abs(coarse - r.value);
        r.coverage_ok = coverage_ok_;
        return r;
    }

private:
    double compute_crosscheck() const {
        double worst = 0.0;
        if (!grid_.radial()) {
            static const GaussRule gh = gauss_hermite(200);
            for (int n = 0; n <= 5; ++n)
                for (int m = 0; m <= 5; ++m) {
                    // y = 2u maps rho dy to e^(-u^2) du / sqrt(pi)
                    double ref = 0.0;
                    for (std::size_t k = 0; k < gh.nodes.size(); ++k)
                        ref += gh.weights[k] * hermite_poly(n, 2.0 * gh.nodes[k]) * hermite_poly(m, 2.0 * gh.nodes[k]);
                    ref /= std::sqrt(std::numbers::pi);
                    const double trap = integrate([&](std::size_t i) {
                        return hermite_poly(n, grid_.y[i]) * hermite_poly(m, grid_.y[i]);
                    });
                    worst = std::max(worst, std::abs(trap - ref) / std::max(1.0, std::abs(ref)));
                }
        } else {
            // E|Y|^(2k) = 4^k Gamma(N/2+k)/Gamma(N/2) for Y with density rho
            for (int k = 0; k <= 5; ++k) {
                const double ref = std::pow(4.0, k) * std::exp(std::lgamma(0.5 * grid_.dim + k) - std::lgamma(0.5 * grid_.dim));
                const double trap = integrate([&](std::size_t i) { return std::pow(grid_.y[i], 2 * k); });
                worst = std::max(worst, std::abs(trap - ref) / std::max(1.0, ref));
            }
        }
        return worst;
    }

    YGrid grid_;
    std::vector<double> w_;
    bool coverage_ok_ = true;
    double crosscheck_ = 0.0;
};

inline InnerResult inner_rho(const std::vector<double>& f, const std::vector<double>& g, const RhoQuadrature& quad) {
    return quad.inner(f, g);
}

/// Q = q0 + q1.y + y^T q2 y - 2 tr q2 + q_minus + q_e.
/// Radial mode: q1 = 0, q2 = q2_iso * I, grid functions are radial profiles.
struct ModeDecomposition {
    double s = 0.0;
    double q0 = 0.0;
    std::vector<double> q1;  // length N
    std::vector<double> q2;  // N x N row-major
    std::vector<double> q_minus, q_perp, q_e, grad_q_perp;
};

namespace detail {
inline void require_coverage(const YGrid& g, double s, const SimParams& p) {
    if (g.extent() < 2.0 * p.K0 * std::sqrt(s) - 1e-9)
        throw DomainError("decompose: grid does not cover |y| <= 2 K0 sqrt(s)");
}
}  // namespace detail

inline ModeDecomposition decompose(const RhoQuadrature& quad, const std::vector<double>& Q, double s, const SimParams& p) {
    const YGrid& g = quad.grid();
    detail::require_coverage(g, s, p);
    const std::size_t n = g.size();
    const int N = g.dim;
    std::vector<double> qb(n);
    ModeDecomposition md;
    md.s = s;
    md.q_e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double chi = chi_cutoff(std::abs(g.y[i]), s, p.K0);
        qb[i] = chi * Q[i];
        md.q_e[i] = (1.0 - chi) * Q[i];
    }
    md.q0 = quad.integrate(qb);
    md.q1.assign(N, 0.0);
    md.q2.assign(N * N, 0.0);
    md.q_minus.resize(n);
    md.q_perp.resize(n);
    if (!g.radial()) {
        md.q1[0] = 0.5 * quad.integrate([&](std::size_t i) { return qb[i] * g.y[i]; });
        md.q2[0] = quad.integrate([&](std::size_t i) { return qb[i] * (g.y[i] * g.y[i] / 8.0 - 0.25); });
        for (std::size_t i = 0; i < n; ++i) {
            const double y = g.y[i];
            md.q_perp[i] = qb[i] - md.q0 - md.q1[0] * y;
            md.q_minus[i] = md.q_perp[i] - md.q2[0] * (y * y - 2.0);
        }
    } else {
        const double c = quad.integrate([&](std::size_t i) { return qb[i] * (g.y[i] * g.y[i] / (8.0 * N) - 0.25); });
        for (int k = 0; k < N; ++k) md.q2[k * N + k] = c;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g.y[i];
            md.q_perp[i] = qb[i] - md.q0;
            md.q_minus[i] = md.q_perp[i] - c * (r * r - 2.0 * N);
        }
    }
    return md;
}

/// P_perp(chi grad Q): removes the degree 0 and 1 projections.
/// Radial mode: gradQ is the radial component, and so is the result.
inline std::vector<double> grad_perp(const RhoQuadrature& quad, const std::vector<double>& gradQ, double s, const SimParams& p) {
    const YGrid& g = quad.grid();
    detail::require_coverage(g, s, p);
    const std::size_t n = g.size();
    std::vector<double> gb(n), out(n);
    for (std::size_t i = 0; i < n; ++i) gb[i] = chi_cutoff(std::abs(g.y[i]), s, p.K0) * gradQ[i];
    if (!g.radial()) {
        const double p0 = quad.integrate(gb);
        const double p1 = 0.5 * quad.integrate([&](std::size_t i) { return gb[i] * g.y[i]; });
        for (std::size_t i = 0; i < n; ++i) out[i] = gb[i] - p0 - p1 * g.y[i];
    } else {
        const double c = quad.integrate([&](std::size_t i) { return gb[i] * g.y[i]; }) / (2.0 * g.dim);
        for (std::size_t i = 0; i < n; ++i) out[i] = gb[i] - c * g.y[i];
    }
    return out;
}

/// Grid function q0 + q1.y + y^T q2 y - 2 tr q2 + q_minus + q_e.
inline std::vector<double> reconstruct(const ModeDecomposition& md, const YGrid& g) {
    const int N = g.dim;
    std::vector<double> out(g.size());
    double tr = 0.0;
    for (int k = 0; k < N; ++k) tr += md.q2[k * N + k];
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        // radial q2 is isotropic, so y^T q2 y = q2[0] r^2 in both modes
        const double quad_form = md.q2[0] * y * y;
        const double lin = g.radial() ? 0.0 : md.q1[0] * y;
        out[i] = md.q0 + lin + quad_form - 2.0 * tr + md.q_minus[i] + md.q_e[i];
    }
    return out;
}

}  // namespace blowup
