#ifndef CAFPCA_GRID_HPP
#define CAFPCA_GRID_HPP

#include <cstddef>
#include <vector>

#include "cafpca/errors.hpp"

namespace cafpca {

// Closed interval [lo, hi] with lo < hi.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// n equispaced nodes spanning [lo, hi], endpoints included. n >= 2.
std::vector<double> linspace(double lo, double hi, std::size_t n);

// Trapezoid quadrature weights for an ascending (not necessarily uniform) grid.
std::vector<double> trapezoid_weights(const std::vector<double>& grid);

// Trapezoid integral of values sampled on an ascending grid.
double trapezoid_integral(const std::vector<double>& grid, const std::vector<double>& values);

// Piecewise-linear interpolation on an ascending grid, clamped at the ends.
double interp_linear(const std::vector<double>& grid, const std::vector<double>& values, double x);

// Bracketing helper: index i with grid[i] <= x <= grid[i+1] (clamped) and the
// local weight alpha in [0,1] such that x ~ (1-alpha)*grid[i] + alpha*grid[i+1].
struct GridBracket {
    std::size_t index;
    double alpha;
};
GridBracket bracket(const std::vector<double>& grid, double x);

}  // namespace cafpca

#endif  // CAFPCA_GRID_HPP
