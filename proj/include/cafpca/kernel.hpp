#ifndef CAFPCA_KERNEL_HPP
#define CAFPCA_KERNEL_HPP

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cafpca/errors.hpp"

namespace cafpca {

// Location in up to three smoothing coordinates; unused coordinates stay 0.
using Point = std::array<double, 3>;

enum class KernelFamily { epanechnikov };

// Product kernel in 1-3 dimensions. Only the symmetric compactly supported
// Epanechnikov base of order (0, 2) is implemented; the order is carried so
// the contract is explicit.
struct KernelSpec {
    int dimension = 1;
    KernelFamily base = KernelFamily::epanechnikov;
    int order_nu = 0;
    int order_kappa = 2;

    void validate() const;
};

// Per-dimension positive bandwidths.
struct Bandwidths {
    Bandwidths() = default;
    explicit Bandwidths(double h1) : h_{h1, 0.0, 0.0}, dim_(1) {}
    Bandwidths(double h1, double h2) : h_{h1, h2, 0.0}, dim_(2) {}
    Bandwidths(double h1, double h2, double h3) : h_{h1, h2, h3}, dim_(3) {}

    int dimension() const { return dim_; }
    double operator[](int i) const { return h_[static_cast<std::size_t>(i)]; }

    Bandwidths scaled(double factor) const;
    void validate(int dimension) const;  // positive, finite, matching dimension

private:
    std::array<double, 3> h_{0.0, 0.0, 0.0};
    int dim_ = 0;
};

// One observation for a local fit: location, response, nonnegative base weight.
struct WeightedSample {
    Point x{0.0, 0.0, 0.0};
    double y = 0.0;
    double w = 1.0;
};

// Product-kernel value at u; zero outside [-1,1]^d, unit mass over R^d.
double kernel_eval(const KernelSpec& spec, const Point& u);

// 1D Epanechnikov base: 0.75 (1 - u^2) on [-1, 1].
double epanechnikov(double u);

// Result of one local polynomial fit.
struct LocalFit {
    double value = 0.0;                        // beta0: fitted value at the target
    std::array<double, 3> slope{0.0, 0.0, 0.0};  // per-dimension slopes (degree 1)
    int degree = 0;
    double widening = 1.0;  // bandwidth scale actually used (1.0 = no fallback)
};

// Kernel-weighted local polynomial regression at a single target.
//
// degree 0 is the Nadaraya-Watson weighted mean; degree 1 the local linear
// fit with regressors (x - target). If the window holds fewer than d+2
// samples (degree 1; 1 for degree 0) the bandwidths are scaled by 1.5, up to
// five times; an exhausted or singular fit raises SingularFitError.
LocalFit local_poly_fit(std::span<const WeightedSample> samples, const Point& target,
                        const Bandwidths& bw, int degree, const KernelSpec& spec);

// Batched local fits: element i equals local_poly_fit at targets[i].
// Per-target failures are reported with the target index attached.
std::vector<double> fit_surface(std::span<const WeightedSample> samples,
                                std::span<const Point> targets, const Bandwidths& bw,
                                int degree, const KernelSpec& spec);

}  // namespace cafpca

#endif  // CAFPCA_KERNEL_HPP
