#ifndef CAFPCA_SCORES_HPP
#define CAFPCA_SCORES_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafpca/dataset.hpp"
#include "cafpca/eigen_fpca.hpp"

namespace cafpca {

// Conditional-expectation (BLUP) principal component scores under joint
// Gaussianity:  A_ik = lambda_k phi_ik' Sigma^{-1} (Y_i - mu_i)  with
// Sigma_jl = Gamma(T_ij, T_il) + sigma2 delta_jl. Gamma and the eigenfunctions
// are read off the stored grids by (bi)linear interpolation so the score
// covariance stays consistent with the decomposition that produced them.
// gamma_on_grid must live on eigen.t_grid and hold the PSD part of the
// surface (eigen.reconstructed_gamma(), the same decomposition the
// eigenfunctions came from); raw smoothed surfaces can be indefinite and
// would let near-null directions dominate the inversion.
Eigen::VectorXd blup_scores(const Subject& subject, std::span<const double> mean_at_obs,
                            const EigenSystem& eigen, const Eigen::MatrixXd& gamma_on_grid,
                            double sigma2, std::size_t k);

// Predicted trajectory on t_grid: mean plus the score-weighted eigenfunction
// sum truncated at k components (k = 0 reproduces the mean).
std::vector<double> predict_trajectory(std::span<const double> mean_on_grid,
                                       const EigenSystem& eigen, std::span<const double> scores,
                                       std::size_t k, const std::vector<double>& t_grid);

// Per-subject ingredients for the information criteria.
struct SubjectFitData {
    Eigen::VectorXd y;            // observations
    Eigen::VectorXd mu;           // fitted mean at the observation times
    Eigen::MatrixXd phi_at_obs;   // N_i x K_max eigenfunction values
    Eigen::VectorXd scores;       // K_max BLUP scores
};

// Pseudo-Gaussian deviance D(K) = sum_i { N_i log(2 pi sigma2) +
// ||y_i - mu_i - sum_{k<=K} A_ik phi_ik||^2 / sigma2 }; AIC = D + 2K and
// BIC = D + K log(total observations). Smallest K wins ties.
ComponentSelection select_k_ic(std::span<const SubjectFitData> subjects, double sigma2,
                               SelectionCriterion criterion, std::size_t k_max);

// Mean integrated squared error of predicted curves against true curves on a
// shared grid (trapezoid rule, averaged over subjects).
double mise(const Eigen::MatrixXd& true_curves, const Eigen::MatrixXd& predictions,
            const std::vector<double>& t_grid);

// Mean squared fitting error: subject-averaged mean squared residual of the
// fitted values at the observations.
double msfe(const LongitudinalDataset& data, const std::vector<std::vector<double>>& fitted);

}  // namespace cafpca

#endif  // CAFPCA_SCORES_HPP
