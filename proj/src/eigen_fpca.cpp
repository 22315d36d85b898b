#include "cafpca/eigen_fpca.hpp"

#include <algorithm>
#include <cmath>

#include "cafpca/errors.hpp"
#include "cafpca/grid.hpp"

namespace cafpca {

double EigenSystem::eigenfunction_at(std::size_t k, double t) const {
    GridBracket b = bracket(t_grid, t);
    auto i = static_cast<Eigen::Index>(b.index);
    auto col = static_cast<Eigen::Index>(k);
    return eigenfunctions(i, col) + b.alpha * (eigenfunctions(i + 1, col) - eigenfunctions(i, col));
}

Eigen::MatrixXd EigenSystem::reconstructed_gamma() const {
    const auto n = static_cast<Eigen::Index>(t_grid.size());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < retained(); ++k) {
        const auto col = eigenfunctions.col(static_cast<Eigen::Index>(k));
        g.noalias() += eigenvalues[k] * col * col.transpose();
    }
    return g;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& gamma, std::vector<double> t_grid,
                           std::vector<double> quad_weights) {
    const auto n = static_cast<std::size_t>(gamma.rows());
    if (gamma.rows() != gamma.cols()) throw IntegrityError("eigendecompose: grid not square");
    if (t_grid.size() != n || quad_weights.size() != n)
        throw IntegrityError("eigendecompose: grid size mismatch");
    for (double w : quad_weights)
        if (!(w > 0.0)) throw IntegrityError("eigendecompose: nonpositive quadrature weight");
    double asym = (gamma - gamma.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) throw IntegrityError("eigendecompose: input grid asymmetric beyond 1e-9");

    Eigen::VectorXd sqrt_w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        sqrt_w(static_cast<Eigen::Index>(i)) = std::sqrt(quad_weights[i]);

    Eigen::MatrixXd sym = 0.5 * (gamma + gamma.transpose());
    Eigen::MatrixXd b = sqrt_w.asDiagonal() * sym * sqrt_w.asDiagonal();
    b = 0.5 * (b + b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigendecompose: eigen solver did not converge");

    EigenSystem sys;
    sys.t_grid = std::move(t_grid);
    sys.quad_weights = std::move(quad_weights);

    // ascending from the solver; keep strictly positive ones, largest first
    const Eigen::VectorXd& vals = solver.eigenvalues();
    std::size_t kept = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        if (vals(i) > 0.0) ++kept;
    sys.eigenvalues.resize(kept);
    sys.eigenfunctions.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept));

    std::size_t out = 0;
    for (Eigen::Index i = vals.size() - 1; i >= 0 && out < kept; --i) {
        if (!(vals(i) > 0.0)) continue;
        sys.eigenvalues[out] = vals(i);
        Eigen::VectorXd phi = solver.eigenvectors().col(i).cwiseQuotient(sqrt_w);
        // unit quadrature norm
        double norm2 = 0.0;
        for (std::size_t g = 0; g < n; ++g) {
            double v = phi(static_cast<Eigen::Index>(g));
            norm2 += sys.quad_weights[g] * v * v;
        }
        phi /= std::sqrt(norm2);
        // sign convention
        double integral = 0.0;
        for (std::size_t g = 0; g < n; ++g)
            integral += sys.quad_weights[g] * phi(static_cast<Eigen::Index>(g));
        bool flip = std::abs(integral) < 1e-6 ? phi(0) < 0.0 : integral < 0.0;
        if (flip) phi = -phi;
        sys.eigenfunctions.col(static_cast<Eigen::Index>(out)) = phi;
        ++out;
    }
    return sys;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& gamma, std::vector<double> t_grid) {
    std::vector<double> w = trapezoid_weights(t_grid);
    return eigendecompose(gamma, std::move(t_grid), std::move(w));
}

EigenSystem eigendecompose_adjusted(const CovarianceModel& model, double z) {
    if (model.kind != CovarianceKind::covariate_adjusted)
        throw IntegrityError("eigendecompose_adjusted: model is not covariate-adjusted");
    if (z < model.z_grid.front() - 1e-12 || z > model.z_grid.back() + 1e-12)
        throw DomainError("eigendecompose_adjusted: z outside the covariate domain");
    EigenSystem sys = eigendecompose(model.interpolated_slice(z), model.t_grid);
    sys.covariate = z;
    return sys;
}

ComponentSelection select_k_fve(std::span<const double> eigenvalues, double threshold) {
    double total = 0.0;
    for (double v : eigenvalues)
        if (v > 0.0) total += v;
    if (!(total > 0.0)) throw SelectionError("select_k_fve: no positive eigenvalue");

    ComponentSelection sel;
    sel.criterion = SelectionCriterion::fve;
    sel.threshold = threshold;
    double cum = 0.0;
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
        if (eigenvalues[k] > 0.0) cum += eigenvalues[k];
        // the slack absorbs rounding when the true ratio sits exactly on the
        // threshold (e.g. eigenvalues z/9, z/36 at threshold 0.80)
        if (cum / total >= threshold - 1e-12) {
            sel.K = k + 1;
            return sel;
        }
    }
    sel.K = eigenvalues.size();
    return sel;
}

ComponentSelection select_k_fve_adjusted(std::span<const EigenSystem> per_subject,
                                         double threshold) {
    if (per_subject.empty()) throw SelectionError("select_k_fve_adjusted: no subjects");
    ComponentSelection sel;
    sel.criterion = SelectionCriterion::fve;
    sel.threshold = threshold;
    sel.per_subject_k.reserve(per_subject.size());
    for (const EigenSystem& sys : per_subject)
        sel.per_subject_k.push_back(select_k_fve(sys.eigenvalues, threshold).K);

    // ceiling of the interpolated 90th percentile; exact in integer arithmetic
    std::vector<std::size_t> sorted = sel.per_subject_k;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::size_t pos10 = (n - 1) * 9;  // percentile position scaled by 10
    const std::size_t lo = pos10 / 10;
    const std::size_t rem = pos10 % 10;
    if (rem == 0 || sorted[lo] == sorted[lo + 1]) {
        sel.K = sorted[lo];
    } else {
        double q = static_cast<double>(sorted[lo]) +
                   static_cast<double>(rem) / 10.0 *
                       static_cast<double>(sorted[lo + 1] - sorted[lo]);
        sel.K = static_cast<std::size_t>(std::ceil(q));
    }
    return sel;
}

}  // namespace cafpca
