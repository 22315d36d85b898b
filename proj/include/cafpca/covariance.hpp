#ifndef CAFPCA_COVARIANCE_HPP
#define CAFPCA_COVARIANCE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafpca/dataset.hpp"
#include "cafpca/kernel.hpp"
#include "cafpca/mean.hpp"

namespace cafpca {

// One off-diagonal raw covariance C_ijk = r_ij r_ik, j != k (both orders kept).
struct RawCovRecord {
    std::size_t subject;
    double t1, t2;
    double z;
    double value;
};

// One diagonal entry C_ijj = r_ij^2; smoothed separately because its
// expectation carries the extra measurement-error variance.
struct RawDiagRecord {
    std::size_t subject;
    double t;
    double z;
    double value;
};

struct RawCovariances {
    std::vector<RawCovRecord> off_diagonal;  // sum_i N_i (N_i - 1) records, subject-contiguous
    std::vector<RawDiagRecord> diagonal;     // sum_i N_i records
};

// Residual products against the fitted mean at the observation locations.
RawCovariances raw_covariances(const LongitudinalDataset& data, const MeanSurface& mean);

enum class CovarianceKind { pooled, covariate_adjusted };

struct CovGridSpec {
    std::size_t t_points = 51;
    std::size_t z_points = 11;  // adjusted kind only

    static CovGridSpec pooled_default() { return {51, 0}; }
    static CovGridSpec adjusted_default() { return {31, 11}; }
};

// Smoothed covariance surface(s) plus the diagonal variance fit and the
// measurement-error variance. gamma holds one symmetric t x t matrix for the
// pooled kind and one matrix per z-grid node for the covariate-adjusted kind.
struct CovarianceModel {
    CovarianceKind kind = CovarianceKind::pooled;
    SmootherKind smoother = SmootherKind::local_linear;
    Bandwidths bandwidths;  // (h) pooled, shared by both time axes; (h_t, h_z) adjusted
    std::vector<double> t_grid;
    std::vector<double> z_grid;
    std::vector<Eigen::MatrixXd> gamma;
    Eigen::MatrixXd variance_diag;  // nt x 1 (pooled) or nt x nz (adjusted)
    double sigma2 = 0.0;

    // bilinear interpolation inside the given stored slice
    double gamma_at(double t, double s, std::size_t z_index = 0) const;
    // z-slice by linear interpolation between adjacent stored slices,
    // re-symmetrized; adjusted kind only
    Eigen::MatrixXd interpolated_slice(double z) const;
};

// 2D local smooth of the off-diagonal raw covariances on t_grid x t_grid with
// one bandwidth for both axes, symmetrized by averaging with the transpose.
CovarianceModel estimate_gamma_pooled(const RawCovariances& raw, double bandwidth,
                                      SmootherKind smoother, std::vector<double> t_grid);

// 3D local smooth on t_grid x t_grid x z_grid; the time bandwidth is shared by
// both time axes and every z-slice is symmetrized.
CovarianceModel estimate_gamma_adjusted(const RawCovariances& raw, const Bandwidths& bw,
                                        SmootherKind smoother, std::vector<double> t_grid,
                                        std::vector<double> z_grid);

// Diagonal variance fit V(t) (pooled: 1D bandwidth) or V(t, z) (adjusted:
// (h_t, h_z)); written into model.variance_diag.
void estimate_variance_diag(const RawCovariances& raw, const Bandwidths& bw, SmootherKind smoother,
                            CovarianceModel& model);

// Trimmed-mean noise variance: trapezoid average of V - Gamma(t, t[, z]) over
// the central half of the time domain (and all of Z when adjusted), clamped at
// zero. Stores and returns the estimate.
double estimate_sigma2(CovarianceModel& model, const Interval& time_domain);

struct CovCvResult {
    Bandwidths selected;
    std::vector<Bandwidths> candidates;
    std::vector<double> scores;            // +inf marks a failed candidate
    std::vector<std::size_t> fold_of_subject;  // deterministic given the seed
};

// k-fold cross-validation for the covariance bandwidths: subjects are
// shuffled with the seed and dealt into k folds; each candidate is scored by
// the squared prediction error of the fold-excluded smoother at the held-out
// raw-pair locations. Candidates are (h) for pooled, (h_t, h_z) for adjusted.
// Ties go to the larger bandwidths.
CovCvResult kfold_scores(const LongitudinalDataset& data, const MeanSurface& mean,
                         std::span<const Bandwidths> candidates, std::size_t k,
                         CovarianceKind kind, SmootherKind smoother, std::uint64_t seed);

Bandwidths kfold_bandwidth(const LongitudinalDataset& data, const MeanSurface& mean,
                           std::span<const Bandwidths> candidates, std::size_t k,
                           CovarianceKind kind, SmootherKind smoother, std::uint64_t seed);

// Log-spaced candidates over 5%..50% of the domain lengths.
std::vector<Bandwidths> default_cov_candidates(const LongitudinalDataset& data, CovarianceKind kind,
                                               std::size_t per_dim = 6);

}  // namespace cafpca

#endif  // CAFPCA_COVARIANCE_HPP
