#ifndef CAFPCA_EIGEN_FPCA_HPP
#define CAFPCA_EIGEN_FPCA_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafpca/covariance.hpp"

namespace cafpca {

// Solution of the discretized eigen-equation  int Gamma(t,s) phi(s) ds =
// lambda phi(t)  on a quadrature grid: nonincreasing positive eigenvalues and
// eigenfunctions normalized to unit quadrature norm, sign fixed so the
// quadrature integral of each eigenfunction is nonnegative (falling back to a
// nonnegative left endpoint when that integral is near zero).
struct EigenSystem {
    std::vector<double> t_grid;
    std::vector<double> quad_weights;
    std::vector<double> eigenvalues;   // descending, strictly positive
    Eigen::MatrixXd eigenfunctions;    // nt x retained()
    std::optional<double> covariate;   // z of the slice (covariate-adjusted only)

    std::size_t retained() const { return eigenvalues.size(); }
    // linear interpolation of eigenfunction k at time t
    double eigenfunction_at(std::size_t k, double t) const;
    // PSD reconstruction sum_k lambda_k phi_k phi_k' on the grid
    Eigen::MatrixXd reconstructed_gamma() const;
};

// Weighted symmetric eigenproblem via the similarity transform
// W^{1/2} Gamma W^{1/2}; negative eigenvalues are discarded together with
// their eigenfunctions. The input grid must be symmetric to 1e-9.
EigenSystem eigendecompose(const Eigen::MatrixXd& gamma, std::vector<double> t_grid,
                           std::vector<double> quad_weights);

// Convenience overload using trapezoid weights for the grid.
EigenSystem eigendecompose(const Eigen::MatrixXd& gamma, std::vector<double> t_grid);

// Decomposes the interpolated z-slice of a covariate-adjusted model.
EigenSystem eigendecompose_adjusted(const CovarianceModel& model, double z);

enum class SelectionCriterion { fve, aic, bic };

struct ComponentSelection {
    SelectionCriterion criterion = SelectionCriterion::fve;
    double threshold = 0.80;           // FVE only
    std::size_t K = 0;
    std::vector<std::size_t> per_subject_k;  // adjusted-FVE only
};

// Smallest k whose eigenvalue mass reaches the threshold fraction.
ComponentSelection select_k_fve(std::span<const double> eigenvalues, double threshold);

// Covariate-adjusted rule: per-subject k at each subject's own z, then the
// global K is the ceiling of the interpolated 90th percentile of those k's.
ComponentSelection select_k_fve_adjusted(std::span<const EigenSystem> per_subject,
                                         double threshold);

}  // namespace cafpca

#endif  // CAFPCA_EIGEN_FPCA_HPP
