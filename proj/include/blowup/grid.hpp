#pragma once

#include <cmath>
#include <vector>

#include "params.hpp"

namespace blowup {

/// Uniform similarity grid. Full line for dim == 1, radius r >= 0 otherwise.
struct YGrid {
    std::vector<double> y;
    double dy = 0.0;
    int dim = 1;

    bool radial() const { return dim > 1; }
    std::size_t size() const { return y.size(); }
    double extent() const { return y.back(); }

    static YGrid make(double y_max, double dy_target, int dim) {
        if (!(y_max > 0.0 && dy_target > 0.0)) throw DomainError("YGrid needs y_max > 0 and dy > 0");
        YGrid g;
        g.dim = dim;
        const auto m = static_cast<std::size_t>(std::ceil(y_max / dy_target - 1e-9));
        g.dy = y_max / static_cast<double>(m);
        if (dim == 1) {
            g.y.resize(2 * m + 1);
            for (std::size_t i = 0; i <= 2 * m; ++i)
                g.y[i] = (static_cast<double>(i) - static_cast<double>(m)) * g.dy;
            g.y[m] = 0.0;
        } else {
            g.y.resize(m + 1);
            for (std::size_t i = 0; i <= m; ++i) g.y[i] = static_cast<double>(i) * g.dy;
        }
        return g;
    }
};

/// Centered first derivative on the grid, second-order one-sided at the ends.
/// In radial mode the derivative at r = 0 is zero by symmetry.
inline std::vector<double> grid_gradient(const YGrid& g, const std::vector<double>& f) {
    const std::size_t n = f.size();
    const double h = g.dy;
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d[0] = g.radial() ? 0.0 : (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    return d;
}

}  // namespace blowup
