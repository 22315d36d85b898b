#include "cafpca/fpca.hpp"

#include <algorithm>

#include "cafpca/errors.hpp"
#include "cafpca/parallel.hpp"

namespace cafpca {

namespace {

MeanMode mode_of(FpcaMethod m) {
    return m == FpcaMethod::ufpca ? MeanMode::unadjusted : MeanMode::covariate_adjusted;
}

CovarianceKind cov_kind_of(FpcaMethod m) {
    return m == FpcaMethod::ffpca ? CovarianceKind::covariate_adjusted : CovarianceKind::pooled;
}

}  // namespace

FittedModel fit_model(const LongitudinalDataset& data, const FitOptions& opts) {
    FittedModel model;
    model.method = opts.method;
    model.smoother = opts.smoother;
    model.fve_threshold = opts.fve_threshold;

    const MeanMode mode = mode_of(opts.method);
    const CovarianceKind kind = cov_kind_of(opts.method);

    Bandwidths mean_bw;
    if (opts.mean_bandwidths) {
        mean_bw = *opts.mean_bandwidths;
    } else {
        std::vector<Bandwidths> cands = default_mean_candidates(data, mode, opts.mean_cv_per_dim);
        mean_bw = locv_bandwidth(data, cands, opts.smoother, mode);
    }
    model.mean = estimate_mean(data, mean_bw, opts.smoother, mode, opts.mean_grid);

    Bandwidths cov_bw;
    if (opts.cov_bandwidths) {
        cov_bw = *opts.cov_bandwidths;
    } else {
        std::vector<Bandwidths> cands = default_cov_candidates(data, kind, opts.cov_cv_per_dim);
        cov_bw = kfold_bandwidth(data, model.mean, cands, opts.cv_folds, kind, opts.smoother,
                                 opts.seed);
    }

    const RawCovariances raw = raw_covariances(data, model.mean);
    const CovGridSpec grid = opts.cov_grid.value_or(kind == CovarianceKind::pooled
                                                        ? CovGridSpec::pooled_default()
                                                        : CovGridSpec::adjusted_default());
    std::vector<double> cov_t_grid =
        linspace(data.time_domain().lo, data.time_domain().hi, grid.t_points);

    if (kind == CovarianceKind::pooled) {
        model.covariance = estimate_gamma_pooled(raw, cov_bw[0], opts.smoother, cov_t_grid);
        // the diagonal variance fit reuses the CV time bandwidth
        estimate_variance_diag(raw, Bandwidths(cov_bw[0]), opts.smoother, model.covariance);
    } else {
        std::vector<double> z_grid =
            linspace(data.covariate_domain().lo, data.covariate_domain().hi, grid.z_points);
        model.covariance =
            estimate_gamma_adjusted(raw, cov_bw, opts.smoother, cov_t_grid, std::move(z_grid));
        estimate_variance_diag(raw, cov_bw, opts.smoother, model.covariance);
    }
    model.sigma2 = estimate_sigma2(model.covariance, data.time_domain());

    const std::size_t n = data.size();
    if (kind == CovarianceKind::pooled) {
        model.pooled_eigen = eigendecompose(model.covariance.gamma[0], model.covariance.t_grid);
        model.max_components = model.pooled_eigen.retained();
    } else {
        model.subject_eigen.resize(n);
        parallel_for(n, [&](std::size_t i) {
            model.subject_eigen[i] =
                eigendecompose_adjusted(model.covariance, data.subject(i).covariate);
        });
        model.max_components = 0;
        for (const EigenSystem& sys : model.subject_eigen)
            model.max_components = std::max(model.max_components, sys.retained());
    }

    // BLUP scores for every retained component; selection later only
    // truncates. Sigma is built from the PSD reconstruction of the same
    // decomposition that produced the eigenfunctions.
    model.subject_data.resize(n);
    const Eigen::MatrixXd pooled_psd = kind == CovarianceKind::pooled
                                           ? model.pooled_eigen.reconstructed_gamma()
                                           : Eigen::MatrixXd();
    std::vector<Eigen::MatrixXd> subject_slice(kind == CovarianceKind::pooled ? 0 : n);
    parallel_for(n, [&](std::size_t i) {
        const Subject& s = data.subject(i);
        const EigenSystem& eigen = model.eigen_for(i);
        const Eigen::MatrixXd& gamma_grid =
            kind == CovarianceKind::pooled
                ? pooled_psd
                : (subject_slice[i] = model.subject_eigen[i].reconstructed_gamma());
        const std::vector<double>& mu = model.mean.fitted_at_obs()[i];
        const std::size_t retained = eigen.retained();

        SubjectFitData& sd = model.subject_data[i];
        const auto m = static_cast<Eigen::Index>(s.observations.size());
        sd.y.resize(m);
        sd.mu.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            sd.y(j) = s.observations[static_cast<std::size_t>(j)].value;
            sd.mu(j) = mu[static_cast<std::size_t>(j)];
        }
        sd.phi_at_obs.resize(m, static_cast<Eigen::Index>(retained));
        for (std::size_t c = 0; c < retained; ++c)
            for (Eigen::Index j = 0; j < m; ++j)
                sd.phi_at_obs(j, static_cast<Eigen::Index>(c)) =
                    eigen.eigenfunction_at(c, s.observations[static_cast<std::size_t>(j)].time);
        sd.scores = blup_scores(s, mu, eigen, gamma_grid, model.sigma2, retained);
    });

    // prediction grid: the mean-report t-grid; mu(t, z_i) by direct fits
    model.t_grid = model.mean.t_grid();
    model.mean_on_grid.resize(n);
    if (mode == MeanMode::unadjusted) {
        std::vector<double> shared(model.t_grid.size());
        for (std::size_t g = 0; g < model.t_grid.size(); ++g)
            shared[g] = model.mean.grid_value(g, 0);
        for (std::size_t i = 0; i < n; ++i) model.mean_on_grid[i] = shared;
    } else {
        parallel_for(n, [&](std::size_t i) {
            const double z = data.subject(i).covariate;
            std::vector<double>& row = model.mean_on_grid[i];
            row.resize(model.t_grid.size());
            for (std::size_t g = 0; g < model.t_grid.size(); ++g)
                row[g] = model.mean.evaluate(model.t_grid[g], z);
        });
    }
    return model;
}

FpcaFit finalize_fit(const LongitudinalDataset& data, const FittedModel& model,
                     SelectionCriterion criterion, std::size_t k_max_ic) {
    FpcaFit fit;
    fit.method = model.method;
    fit.sigma2 = model.sigma2;
    fit.t_grid = model.t_grid;

    if (criterion == SelectionCriterion::fve) {
        fit.selection = model.subject_eigen.empty()
                            ? select_k_fve(model.pooled_eigen.eigenvalues, model.fve_threshold)
                            : select_k_fve_adjusted(model.subject_eigen, model.fve_threshold);
    } else if (model.sigma2 > 0.0) {
        std::size_t k_max = std::min(k_max_ic, model.max_components);
        if (k_max == 0) throw SelectionError("finalize_fit: no retained components");
        fit.selection = select_k_ic(model.subject_data, model.sigma2, criterion, k_max);
    } else {
        // AIC/BIC are undefined at sigma2 = 0
        fit.selection = model.subject_eigen.empty()
                            ? select_k_fve(model.pooled_eigen.eigenvalues, model.fve_threshold)
                            : select_k_fve_adjusted(model.subject_eigen, model.fve_threshold);
    }

    const std::size_t n = data.size();
    const std::size_t nt = model.t_grid.size();
    fit.scores.resize(n);
    fit.predictions.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nt));
    fit.fitted_at_obs.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const EigenSystem& eigen = model.eigen_for(i);
        const SubjectFitData& sd = model.subject_data[i];
        const std::size_t k = std::min(fit.selection.K, eigen.retained());

        fit.scores[i].assign(sd.scores.data(), sd.scores.data() + k);
        std::vector<double> pred = predict_trajectory(model.mean_on_grid[i], eigen, fit.scores[i],
                                                      k, model.t_grid);
        for (std::size_t g = 0; g < nt; ++g)
            fit.predictions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = pred[g];

        const auto m = sd.y.size();
        std::vector<double>& fitted = fit.fitted_at_obs[i];
        fitted.resize(static_cast<std::size_t>(m));
        for (Eigen::Index j = 0; j < m; ++j) {
            double v = sd.mu(j);
            for (std::size_t c = 0; c < k; ++c)
                v += fit.scores[i][c] * sd.phi_at_obs(j, static_cast<Eigen::Index>(c));
            fitted[static_cast<std::size_t>(j)] = v;
        }
    }
    fit.msfe_value = msfe(data, fit.fitted_at_obs);
    return fit;
}

FpcaFit fit_fpca(const LongitudinalDataset& data, const FitOptions& opts, FittedModel* keep) {
    FittedModel model = fit_model(data, opts);
    FpcaFit fit = finalize_fit(data, model, opts.criterion, opts.k_max_ic);
    if (keep) *keep = std::move(model);
    return fit;
}

}  // namespace cafpca
