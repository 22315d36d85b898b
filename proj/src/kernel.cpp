#include "cafpca/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Dense>

#include "cafpca/parallel.hpp"

namespace cafpca {

void KernelSpec::validate() const {
    if (dimension < 1 || dimension > 3)
        throw DomainError("KernelSpec: dimension must be 1, 2 or 3");
    if (order_nu != 0 || order_kappa != 2)
        throw DomainError("KernelSpec: only order (0, 2) kernels are supported");
}

Bandwidths Bandwidths::scaled(double factor) const {
    Bandwidths out = *this;
    for (auto& h : out.h_) h *= factor;
    return out;
}

void Bandwidths::validate(int dimension) const {
    if (dim_ != dimension) throw DomainError("Bandwidths: dimension mismatch");
    for (int i = 0; i < dim_; ++i) {
        double h = h_[static_cast<std::size_t>(i)];
        if (!(h > 0.0) || !std::isfinite(h))
            throw DomainError("Bandwidths: entries must be positive and finite");
    }
}

double epanechnikov(double u) {
    double a = std::abs(u);
    if (a >= 1.0) return 0.0;
    return 0.75 * (1.0 - u * u);
}

double kernel_eval(const KernelSpec& spec, const Point& u) {
    spec.validate();
    double k = 1.0;
    for (int i = 0; i < spec.dimension; ++i) {
        k *= epanechnikov(u[static_cast<std::size_t>(i)]);
        if (k == 0.0) return 0.0;
    }
    return k;
}

namespace {

constexpr int kMaxWidenings = 5;
constexpr double kWidenFactor = 1.5;
constexpr double kRidgeScale = 1e-10;

struct NormalEqs {
    // regressors are (1, u_1..u_d) with u = (x - target)/h and responses are
    // centered at the first in-window sample, so the system is well scaled
    // regardless of bandwidths or response level (constant data produce a
    // zero right-hand side exactly)
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double y_center = 0.0;
    std::size_t in_window = 0;
};

NormalEqs accumulate(std::span<const WeightedSample> samples, const Point& target, int dim,
                     int degree, const std::array<double, 3>& inv_h) {
    NormalEqs eq;
    const int p = degree == 1 ? dim + 1 : 1;
    for (const WeightedSample& s : samples) {
        double u1 = 0.0, u2 = 0.0;
        double u0 = (s.x[0] - target[0]) * inv_h[0];
        if (std::abs(u0) >= 1.0) continue;
        double k = 0.75 * (1.0 - u0 * u0);
        if (dim >= 2) {
            u1 = (s.x[1] - target[1]) * inv_h[1];
            if (std::abs(u1) >= 1.0) continue;
            k *= 0.75 * (1.0 - u1 * u1);
        }
        if (dim >= 3) {
            u2 = (s.x[2] - target[2]) * inv_h[2];
            if (std::abs(u2) >= 1.0) continue;
            k *= 0.75 * (1.0 - u2 * u2);
        }
        double wt = s.w * k;
        if (!(wt > 0.0)) continue;
        if (eq.in_window == 0) eq.y_center = s.y;
        ++eq.in_window;
        const Eigen::Vector4d v(1.0, u0, u1, u2);
        double wy = wt * (s.y - eq.y_center);
        for (int r = 0; r < p; ++r) {
            eq.b(r) += wy * v(r);
            for (int c = 0; c <= r; ++c) eq.a(r, c) += wt * v(r) * v(c);
        }
    }
    return eq;
}

}  // namespace

LocalFit local_poly_fit(std::span<const WeightedSample> samples, const Point& target,
                        const Bandwidths& bw, int degree, const KernelSpec& spec) {
    spec.validate();
    const int dim = spec.dimension;
    bw.validate(dim);
    if (degree != 0 && degree != 1) throw DomainError("local_poly_fit: degree must be 0 or 1");

    const int p = degree == 1 ? dim + 1 : 1;
    const std::size_t widen_below = degree == 1 ? static_cast<std::size_t>(dim) + 2 : 1;
    const std::size_t hard_minimum = degree == 1 ? static_cast<std::size_t>(dim) + 1 : 1;

    double scale = 1.0;
    NormalEqs eq;
    bool usable = false;
    for (int attempt = 0; attempt <= kMaxWidenings; ++attempt) {
        std::array<double, 3> inv_h{0.0, 0.0, 0.0};
        for (int i = 0; i < dim; ++i) inv_h[static_cast<std::size_t>(i)] = 1.0 / (bw[i] * scale);
        eq = accumulate(samples, target, dim, degree, inv_h);
        if (eq.in_window >= widen_below) {
            usable = true;
            break;
        }
        if (attempt == kMaxWidenings) {
            // exhausted widening; accept if the hard minimum is met
            usable = eq.in_window >= hard_minimum;
            break;
        }
        scale *= kWidenFactor;
    }
    if (!usable) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "local fit window underflow at (%g, %g, %g): %zu sample(s) after %d widenings",
                      target[0], target[1], target[2], eq.in_window, kMaxWidenings);
        throw SingularFitError(msg);
    }

    LocalFit fit;
    fit.degree = degree;
    fit.widening = scale;

    if (degree == 0) {
        fit.value = eq.y_center + eq.b(0) / eq.a(0, 0);
        if (!std::isfinite(fit.value)) throw SingularFitError("degree-0 fit: zero total weight");
        return fit;
    }

    Eigen::MatrixXd a = eq.a.topLeftCorner(p, p).selfadjointView<Eigen::Lower>();
    Eigen::VectorXd b = eq.b.head(p);
    // ridge the slope block only, so constants pass through degenerate
    // windows unchanged
    double ridge = kRidgeScale * a.trace() / static_cast<double>(p);
    Eigen::MatrixXd m = a;
    m.diagonal().tail(p - 1).array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success)
        throw SingularFitError("local fit: normal equations singular after ridge");
    Eigen::VectorXd beta = ldlt.solve(b);

    // one refinement step against the unridged system removes the ridge bias;
    // kept only when it does not worsen the residual
    Eigen::VectorXd r = b - a * beta;
    Eigen::VectorXd refined = beta + ldlt.solve(r);
    if ((b - a * refined).norm() <= r.norm()) beta = refined;

    if (!beta.allFinite()) throw SingularFitError("local fit: singular after ridge");
    fit.value = eq.y_center + beta(0);
    for (int i = 0; i < dim; ++i)
        fit.slope[static_cast<std::size_t>(i)] = beta(i + 1) / (bw[i] * scale);
    return fit;
}

std::vector<double> fit_surface(std::span<const WeightedSample> samples,
                                std::span<const Point> targets, const Bandwidths& bw,
                                int degree, const KernelSpec& spec) {
    std::vector<double> out(targets.size());
    parallel_for(targets.size(), [&](std::size_t i) {
        try {
            out[i] = local_poly_fit(samples, targets[i], bw, degree, spec).value;
        } catch (const Error& e) {
            throw EstimationError("fit_surface target " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace cafpca
