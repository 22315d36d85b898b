#ifndef CAFPCA_SIMULATION_HPP
#define CAFPCA_SIMULATION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cafpca/fpca.hpp"

namespace cafpca {
namespace sim {

// Data-generating model: two-component Karhunen-Loeve truth on [0,1] x [0,1].
double true_mean(double t, double z);
double true_phi1(double t, double z);
double true_phi2(double t, double z);
double true_lambda1(double z);
double true_lambda2(double z);
// rank-2 covariance at covariate z and its covariate-integrated pooled form
double true_gamma(double t, double s, double z);
double true_gamma_pooled(double t, double s);

struct SimConfig {
    std::size_t n = 100;      // subjects per run
    std::size_t runs = 100;   // replicate count
    std::uint64_t seed = 20100401;
    double noise_sd = 0.05;
    std::size_t grid_points = 51;  // design nodes c_0..c_{G-1}; sampling uses s_1..s_{G-2}
    std::size_t n_min = 2;
    std::size_t n_max = 10;
    double fve_threshold = 0.80;
    bool fixed_design = false;  // one jittered grid shared by all runs
    std::size_t report_t_points = 51;

    // in-run bandwidth search (kept small to bound runtime)
    std::size_t cv_per_dim = 4;
    std::size_t cv_folds = 10;
};

struct SimTruth {
    std::vector<double> t_grid;
    Eigen::MatrixXd curves;  // n x |t_grid|: X_i(t, z_i)
    std::vector<double> z;
    Eigen::MatrixXd scores;  // n x 2
};

// One replicate of the jittered-design scheme: per-run jittered time grid,
// uniform covariates, 2..10 observation times drawn without replacement from
// the interior design points, Gaussian scores and measurement noise. The
// result is a pure function of (config, run_index).
std::pair<LongitudinalDataset, SimTruth> generate_dataset(const SimConfig& config,
                                                          std::size_t run_index);

struct Aggregate {
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MethodCriterionCell {
    std::vector<double> mise_runs;
    std::vector<double> msfe_runs;
    std::vector<double> k_runs;
    Aggregate mise;
    Aggregate msfe;
    // aggregates with outlier runs (MISE > 10x its median) excluded
    Aggregate mise_no_outliers;
    Aggregate msfe_no_outliers;
    std::size_t outliers = 0;
};

struct EigenvalueStats {
    double z = 0.0;  // 0 marks the pooled (z-free) entries
    std::size_t component = 0;
    double bias_mean = 0.0;
    double bias_sd = 0.0;
};

struct MonteCarloReport {
    SimConfig config;
    std::vector<FpcaMethod> methods;
    std::vector<SelectionCriterion> criteria;
    std::size_t completed_runs = 0;
    std::vector<std::pair<std::size_t, std::string>> failures;  // run index, message

    std::map<std::pair<FpcaMethod, SelectionCriterion>, MethodCriterionCell> cells;

    // covariance accuracy per run
    std::vector<double> pooled_cov_ise_runs;             // mFPCA
    Aggregate pooled_cov_ise;
    std::map<double, Aggregate> slice_ise;               // fFPCA, per z in {0.1,...,0.9}
    std::vector<EigenvalueStats> eigenvalue_stats;       // fFPCA per z + mFPCA pooled
};

MonteCarloReport run_monte_carlo(const SimConfig& config, const std::vector<FpcaMethod>& methods,
                                 const std::vector<SelectionCriterion>& criteria);

}  // namespace sim
}  // namespace cafpca

#endif  // CAFPCA_SIMULATION_HPP
