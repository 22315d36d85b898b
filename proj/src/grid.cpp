#include "cafpca/grid.hpp"

#include <algorithm>
#include <cmath>

namespace cafpca {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw NumericError("linspace: need at least 2 nodes");
    std::vector<double> g(n);
    double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    std::size_t n = grid.size();
    if (n < 2) throw NumericError("trapezoid_weights: need at least 2 nodes");
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = grid[i + 1] - grid[i];
        if (!(h > 0.0)) throw NumericError("trapezoid_weights: grid not strictly ascending");
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

double trapezoid_integral(const std::vector<double>& grid, const std::vector<double>& values) {
    if (grid.size() != values.size())
        throw IntegrityError("trapezoid_integral: grid/value size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        acc += 0.5 * (grid[i + 1] - grid[i]) * (values[i] + values[i + 1]);
    return acc;
}

GridBracket bracket(const std::vector<double>& grid, double x) {
    std::size_t n = grid.size();
    if (n < 2) throw NumericError("bracket: need at least 2 nodes");
    if (x <= grid.front()) return {0, 0.0};
    if (x >= grid.back()) return {n - 2, 1.0};
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    if (i > n - 2) i = n - 2;
    double span = grid[i + 1] - grid[i];
    double alpha = span > 0.0 ? (x - grid[i]) / span : 0.0;
    return {i, alpha};
}

double interp_linear(const std::vector<double>& grid, const std::vector<double>& values, double x) {
    if (grid.size() != values.size())
        throw IntegrityError("interp_linear: grid/value size mismatch");
    GridBracket b = bracket(grid, x);
    return values[b.index] + b.alpha * (values[b.index + 1] - values[b.index]);
}

}  // namespace cafpca
