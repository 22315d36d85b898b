#ifndef CAFPCA_MEAN_HPP
#define CAFPCA_MEAN_HPP

#include <memory>
#include <span>
#include <vector>

#include "cafpca/dataset.hpp"
#include "cafpca/kernel.hpp"

namespace cafpca {

enum class MeanMode { covariate_adjusted, unadjusted };
enum class SmootherKind { local_linear, nadaraya_watson };

struct MeanGridSpec {
    std::size_t t_points = 51;
    std::size_t z_points = 21;  // ignored in unadjusted mode
};

// Estimated mean surface mu(t, z) (or curve mu(t) in unadjusted mode).
//
// Holds the fits at every observation location, a report grid, and a shared
// copy of the pooled training samples so the surface can be evaluated at
// arbitrary points with the same smoother it was built with.
class MeanSurface {
public:
    MeanMode mode() const { return mode_; }
    SmootherKind smoother() const { return smoother_; }
    const Bandwidths& bandwidths() const { return bandwidths_; }

    // mu_hat(T_ij, Z_i): one inner vector per subject, one entry per observation.
    const std::vector<std::vector<double>>& fitted_at_obs() const { return fitted_at_obs_; }

    const std::vector<double>& t_grid() const { return t_grid_; }
    const std::vector<double>& z_grid() const { return z_grid_; }  // empty when unadjusted
    // report-grid value at (t_grid[i], z_grid[j]); j must be 0 when unadjusted
    double grid_value(std::size_t i, std::size_t j) const {
        return grid_values_[i * (z_grid_.empty() ? 1 : z_grid_.size()) + j];
    }

    // Direct local fit at (t, z); z is ignored in unadjusted mode.
    double evaluate(double t, double z) const;

private:
    friend MeanSurface estimate_mean(const LongitudinalDataset&, const Bandwidths&, SmootherKind,
                                     MeanMode, const MeanGridSpec&);

    MeanMode mode_ = MeanMode::covariate_adjusted;
    SmootherKind smoother_ = SmootherKind::local_linear;
    Bandwidths bandwidths_;
    KernelSpec spec_;
    std::shared_ptr<const std::vector<WeightedSample>> samples_;
    std::vector<std::vector<double>> fitted_at_obs_;
    std::vector<double> t_grid_;
    std::vector<double> z_grid_;
    std::vector<double> grid_values_;  // t-major
};

// Pools all (T_ij[, Z_i], Y_ij) points and smooths them at every observation
// location and every report-grid node. Bandwidths: (h_t, h_z) when adjusted,
// (h_t) when unadjusted.
MeanSurface estimate_mean(const LongitudinalDataset& data, const Bandwidths& bw,
                          SmootherKind smoother, MeanMode mode, const MeanGridSpec& grid = {});

struct MeanCvResult {
    Bandwidths selected;
    std::vector<Bandwidths> candidates;
    std::vector<double> scores;  // +inf marks a candidate that failed
};

// Leave-one-curve-out CV score for every candidate; ties go to the larger
// bandwidths. Throws SelectionError when no candidate is feasible.
MeanCvResult locv_scores(const LongitudinalDataset& data, std::span<const Bandwidths> candidates,
                         SmootherKind smoother, MeanMode mode);

Bandwidths locv_bandwidth(const LongitudinalDataset& data, std::span<const Bandwidths> candidates,
                          SmootherKind smoother, MeanMode mode);

// Log-spaced candidate grid: per_dim values per dimension spanning 5%..50% of
// the domain length, crossed over dimensions in adjusted mode.
std::vector<Bandwidths> default_mean_candidates(const LongitudinalDataset& data, MeanMode mode,
                                                std::size_t per_dim = 6);

}  // namespace cafpca

#endif  // CAFPCA_MEAN_HPP
