#ifndef CAFPCA_FPCA_HPP
#define CAFPCA_FPCA_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "cafpca/covariance.hpp"
#include "cafpca/eigen_fpca.hpp"
#include "cafpca/mean.hpp"
#include "cafpca/scores.hpp"

namespace cafpca {

// uFPCA ignores the covariate, mFPCA adjusts the mean only, fFPCA adjusts
// both the mean and the covariance.
enum class FpcaMethod { ufpca, mfpca, ffpca };

struct FitOptions {
    FpcaMethod method = FpcaMethod::mfpca;
    SelectionCriterion criterion = SelectionCriterion::fve;
    double fve_threshold = 0.80;
    SmootherKind smoother = SmootherKind::local_linear;

    std::optional<Bandwidths> mean_bandwidths;  // leave-one-curve-out CV when absent
    std::optional<Bandwidths> cov_bandwidths;   // k-fold CV when absent
    std::size_t cv_folds = 10;
    std::size_t mean_cv_per_dim = 6;
    std::size_t cov_cv_per_dim = 6;
    std::uint64_t seed = 1;

    MeanGridSpec mean_grid{51, 21};
    std::optional<CovGridSpec> cov_grid;  // per-kind default when absent
    std::size_t k_max_ic = 10;            // cap for AIC/BIC search
};

// Everything that does not depend on the number of components: fitted mean,
// covariance model, eigen systems (pooled, or per subject for fFPCA), BLUP
// scores for every retained component, and the prediction-grid evaluations.
struct FittedModel {
    FpcaMethod method = FpcaMethod::mfpca;
    SmootherKind smoother = SmootherKind::local_linear;
    double fve_threshold = 0.80;
    MeanSurface mean;
    CovarianceModel covariance;
    EigenSystem pooled_eigen;                 // uFPCA / mFPCA
    std::vector<EigenSystem> subject_eigen;   // fFPCA: one per subject, at its own z
    std::vector<SubjectFitData> subject_data; // y, mu, phi at obs, all-component scores
    std::vector<double> t_grid;               // prediction grid (mean report t-grid)
    std::vector<std::vector<double>> mean_on_grid;  // per subject mu(t_grid, z_i)
    double sigma2 = 0.0;
    std::size_t max_components = 0;  // retained (pooled) or max over subjects (fFPCA)

    const EigenSystem& eigen_for(std::size_t subject) const {
        return subject_eigen.empty() ? pooled_eigen : subject_eigen[subject];
    }
};

FittedModel fit_model(const LongitudinalDataset& data, const FitOptions& opts);

// A finalized fit at a chosen number of components.
struct FpcaFit {
    FpcaMethod method = FpcaMethod::mfpca;
    ComponentSelection selection;
    std::vector<std::vector<double>> scores;  // per subject, min(K, retained) entries
    std::vector<double> t_grid;
    Eigen::MatrixXd predictions;              // n x |t_grid|
    std::vector<std::vector<double>> fitted_at_obs;
    double msfe_value = 0.0;
    double sigma2 = 0.0;
};

// Component selection plus predictions and fitting errors. AIC/BIC fall back
// to FVE when sigma2 is zero.
FpcaFit finalize_fit(const LongitudinalDataset& data, const FittedModel& model,
                     SelectionCriterion criterion, std::size_t k_max_ic);

FpcaFit fit_fpca(const LongitudinalDataset& data, const FitOptions& opts, FittedModel* keep = nullptr);

}  // namespace cafpca

#endif  // CAFPCA_FPCA_HPP
