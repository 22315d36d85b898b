#include "cafpca/scores.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cafpca/errors.hpp"
#include "cafpca/grid.hpp"

namespace cafpca {

namespace {

double bilinear(const Eigen::MatrixXd& g, const std::vector<double>& grid, double t, double s) {
    GridBracket bt = bracket(grid, t);
    GridBracket bs = bracket(grid, s);
    auto i = static_cast<Eigen::Index>(bt.index);
    auto j = static_cast<Eigen::Index>(bs.index);
    double a = bt.alpha, b = bs.alpha;
    return (1 - a) * (1 - b) * g(i, j) + a * (1 - b) * g(i + 1, j) + (1 - a) * b * g(i, j + 1) +
           a * b * g(i + 1, j + 1);
}

}  // namespace

Eigen::VectorXd blup_scores(const Subject& subject, std::span<const double> mean_at_obs,
                            const EigenSystem& eigen, const Eigen::MatrixXd& gamma_on_grid,
                            double sigma2, std::size_t k) {
    const std::size_t m = subject.observations.size();
    if (mean_at_obs.size() != m) throw IntegrityError("blup_scores: mean/observation mismatch");
    if (k > eigen.retained())
        throw IntegrityError("blup_scores: more components requested than retained");
    if (!(sigma2 >= 0.0)) throw DomainError("blup_scores: sigma2 must be nonnegative");
    if (k == 0) return Eigen::VectorXd(0);

    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::VectorXd resid(mi);
    for (std::size_t j = 0; j < m; ++j)
        resid(static_cast<Eigen::Index>(j)) = subject.observations[j].value - mean_at_obs[j];

    Eigen::MatrixXd sigma(mi, mi);
    for (std::size_t j = 0; j < m; ++j) {
        double tj = subject.observations[j].time;
        for (std::size_t l = 0; l <= j; ++l) {
            double v = bilinear(gamma_on_grid, eigen.t_grid, tj, subject.observations[l].time);
            sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = v;
            sigma(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = v;
        }
        sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += sigma2;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw NumericError("blup_scores: factorization failed");
    double lam_max = es.eigenvalues().maxCoeff();
    if (!(lam_max > 0.0) || !std::isfinite(lam_max))
        throw ConditioningError("blup_scores: score covariance for subject '" + subject.id +
                                "' is not invertible");
    // gamma_on_grid is the PSD part of the surface, so its interpolation
    // contains lambda_k phi_ik phi_ik' for every retained component and the
    // clipped directions stay out of the score reads. The marginal-variance
    // term matters when sigma2 was clamped to zero: directions carrying less
    // than 1% of the subject's average observed variance are beneath the
    // accuracy of the estimated surface and must not be inverted as exact.
    const double avg_diag = sigma.trace() / static_cast<double>(m);
    const double floor = std::max({sigma2, 0.01 * avg_diag, 1e-8 * lam_max});
    Eigen::VectorXd inv_vals = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv_vals.size(); ++i)
        inv_vals(i) = 1.0 / std::max(inv_vals(i), floor);
    Eigen::VectorXd sigma_inv_resid =
        es.eigenvectors() * (inv_vals.asDiagonal() * (es.eigenvectors().transpose() * resid));

    Eigen::VectorXd scores(static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
        Eigen::VectorXd phi(mi);
        for (std::size_t j = 0; j < m; ++j)
            phi(static_cast<Eigen::Index>(j)) =
                eigen.eigenfunction_at(c, subject.observations[j].time);
        scores(static_cast<Eigen::Index>(c)) = eigen.eigenvalues[c] * phi.dot(sigma_inv_resid);
    }
    return scores;
}

std::vector<double> predict_trajectory(std::span<const double> mean_on_grid,
                                       const EigenSystem& eigen, std::span<const double> scores,
                                       std::size_t k, const std::vector<double>& t_grid) {
    if (mean_on_grid.size() != t_grid.size())
        throw IntegrityError("predict_trajectory: mean/grid size mismatch");
    if (scores.size() < k) throw IntegrityError("predict_trajectory: fewer scores than components");

    std::vector<double> out(mean_on_grid.begin(), mean_on_grid.end());
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t g = 0; g < t_grid.size(); ++g)
            out[g] += scores[c] * eigen.eigenfunction_at(c, t_grid[g]);
    }
    return out;
}

ComponentSelection select_k_ic(std::span<const SubjectFitData> subjects, double sigma2,
                               SelectionCriterion criterion, std::size_t k_max) {
    if (criterion != SelectionCriterion::aic && criterion != SelectionCriterion::bic)
        throw DomainError("select_k_ic: criterion must be AIC or BIC");
    if (!(sigma2 > 0.0))
        throw CriterionUndefinedError("select_k_ic: sigma2 = 0 leaves the deviance undefined");
    if (k_max == 0) throw SelectionError("select_k_ic: k_max must be at least 1");

    std::size_t total_obs = 0;
    for (const SubjectFitData& s : subjects) total_obs += static_cast<std::size_t>(s.y.size());
    const double log_total = std::log(static_cast<double>(total_obs));

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 1;
    for (std::size_t k = 1; k <= k_max; ++k) {
        double deviance = 0.0;
        for (const SubjectFitData& s : subjects) {
            auto cap = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), s.phi_at_obs.cols());
            Eigen::VectorXd resid = s.y - s.mu;
            if (cap > 0) resid -= s.phi_at_obs.leftCols(cap) * s.scores.head(cap);
            deviance += static_cast<double>(s.y.size()) * std::log(2.0 * std::numbers::pi * sigma2) +
                        resid.squaredNorm() / sigma2;
        }
        double penalty = criterion == SelectionCriterion::aic
                             ? 2.0 * static_cast<double>(k)
                             : static_cast<double>(k) * log_total;
        double value = deviance + penalty;
        if (value < best) {
            best = value;
            best_k = k;
        }
    }
    ComponentSelection sel;
    sel.criterion = criterion;
    sel.K = best_k;
    return sel;
}

double mise(const Eigen::MatrixXd& true_curves, const Eigen::MatrixXd& predictions,
            const std::vector<double>& t_grid) {
    if (true_curves.rows() != predictions.rows() || true_curves.cols() != predictions.cols() ||
        static_cast<std::size_t>(true_curves.cols()) != t_grid.size())
        throw IntegrityError("mise: grid mismatch");
    std::vector<double> w = trapezoid_weights(t_grid);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < true_curves.rows(); ++i) {
        double ise = 0.0;
        for (Eigen::Index g = 0; g < true_curves.cols(); ++g) {
            double d = true_curves(i, g) - predictions(i, g);
            ise += w[static_cast<std::size_t>(g)] * d * d;
        }
        acc += ise;
    }
    return acc / static_cast<double>(true_curves.rows());
}

double msfe(const LongitudinalDataset& data, const std::vector<std::vector<double>>& fitted) {
    if (fitted.size() != data.size()) throw IntegrityError("msfe: subject count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Subject& s = data.subject(i);
        if (fitted[i].size() != s.observations.size())
            throw IntegrityError("msfe: fitted value count mismatch for subject '" + s.id + "'");
        double sub = 0.0;
        for (std::size_t j = 0; j < s.observations.size(); ++j) {
            double d = s.observations[j].value - fitted[i][j];
            sub += d * d;
        }
        acc += sub / static_cast<double>(s.observations.size());
    }
    return acc / static_cast<double>(data.size());
}

}  // namespace cafpca
