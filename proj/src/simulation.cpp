#include "cafpca/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "cafpca/errors.hpp"
#include "cafpca/grid.hpp"
#include "cafpca/parallel.hpp"
#include "cafpca/rng.hpp"

namespace cafpca {
namespace sim {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kJitterSd = 0.01;  // jitter variance 1e-4

// substream labels
constexpr std::uint64_t kRunLabel = 1;
constexpr std::uint64_t kJitter = 2;
constexpr std::uint64_t kCovariate = 3;
constexpr std::uint64_t kObsCount = 4;
constexpr std::uint64_t kObsTimes = 5;
constexpr std::uint64_t kScores = 6;
constexpr std::uint64_t kNoise = 7;
constexpr std::uint64_t kFolds = 8;
}  // namespace

double true_mean(double t, double z) { return t + z * std::sin(t) + (1.0 - z) * std::cos(t); }

double true_phi1(double t, double z) {
    return -std::cos(kPi * (t + z / 2.0)) * std::numbers::sqrt2;
}

double true_phi2(double t, double z) {
    return std::sin(kPi * (t + z / 2.0)) * std::numbers::sqrt2;
}

double true_lambda1(double z) { return z / 9.0; }
double true_lambda2(double z) { return z / 36.0; }

double true_gamma(double t, double s, double z) {
    return true_lambda1(z) * true_phi1(t, z) * true_phi1(s, z) +
           true_lambda2(z) * true_phi2(t, z) * true_phi2(s, z);
}

double true_gamma_pooled(double t, double s) {
    // closed form of the z-integral of true_gamma over U(0,1):
    //   (5/72) cos(pi (t-s)) - (1/12) [ sin(pi u)/pi + 2 cos(pi u)/pi^2 ],  u = t+s
    double u = t + s;
    return (5.0 / 72.0) * std::cos(kPi * (t - s)) -
           (1.0 / 12.0) * (std::sin(kPi * u) / kPi + 2.0 * std::cos(kPi * u) / (kPi * kPi));
}

std::pair<LongitudinalDataset, SimTruth> generate_dataset(const SimConfig& config,
                                                          std::size_t run_index) {
    if (config.n < 2) throw DomainError("generate_dataset: need n >= 2");
    if (config.grid_points < 4) throw DomainError("generate_dataset: need at least 4 design nodes");
    if (config.n_min < 1 || config.n_min > config.n_max ||
        config.n_max > config.grid_points - 2)
        throw DomainError("generate_dataset: observation-count range incompatible with the design");
    if (!(config.noise_sd >= 0.0)) throw DomainError("generate_dataset: negative noise sd");

    const Rng root(config.seed);
    const Rng run_rng = root.stream(kRunLabel, run_index);

    // jittered design s_i = clamp(c_i + N(0, 1e-4)); sampling uses the
    // interior nodes s_1..s_{G-2} only
    Rng jitter_rng = config.fixed_design ? root.stream(kJitter, 0) : run_rng.stream(kJitter, 0);
    const std::size_t g = config.grid_points;
    std::vector<double> design(g);
    for (std::size_t i = 0; i < g; ++i) {
        double c = static_cast<double>(i) / static_cast<double>(g - 1);
        design[i] = std::clamp(c + jitter_rng.normal(0.0, kJitterSd), 0.0, 1.0);
    }

    SimTruth truth;
    truth.t_grid = linspace(0.0, 1.0, config.report_t_points);
    truth.curves.resize(static_cast<Eigen::Index>(config.n),
                        static_cast<Eigen::Index>(truth.t_grid.size()));
    truth.z.resize(config.n);
    truth.scores.resize(static_cast<Eigen::Index>(config.n), 2);

    std::vector<Subject> subjects(config.n);
    std::vector<std::size_t> interior(g - 2);
    for (std::size_t i = 0; i < config.n; ++i) {
        double z = run_rng.stream(kCovariate, i).uniform01();
        std::size_t count = static_cast<std::size_t>(
            run_rng.stream(kObsCount, i).uniform_int(static_cast<std::int64_t>(config.n_min),
                                                     static_cast<std::int64_t>(config.n_max)));

        // sample `count` interior design indices without replacement
        std::iota(interior.begin(), interior.end(), std::size_t{1});
        Rng time_rng = run_rng.stream(kObsTimes, i);
        for (std::size_t j = 0; j < count; ++j) {
            std::size_t pick = j + static_cast<std::size_t>(time_rng.uniform_int(
                                       0, static_cast<std::int64_t>(interior.size() - j) - 1));
            std::swap(interior[j], interior[pick]);
        }

        Rng score_rng = run_rng.stream(kScores, i);
        double a1 = score_rng.normal(0.0, std::sqrt(true_lambda1(z)));
        double a2 = score_rng.normal(0.0, std::sqrt(true_lambda2(z)));
        Rng noise_rng = run_rng.stream(kNoise, i);

        Subject subj;
        subj.id = "s" + std::to_string(i + 1);
        subj.covariate = z;
        subj.observations.reserve(count);
        for (std::size_t j = 0; j < count; ++j) {
            double t = design[interior[j]];
            double x = true_mean(t, z) + a1 * true_phi1(t, z) + a2 * true_phi2(t, z);
            subj.observations.push_back(Observation{t, x + noise_rng.normal(0.0, config.noise_sd)});
        }
        subjects[i] = std::move(subj);

        truth.z[i] = z;
        truth.scores(static_cast<Eigen::Index>(i), 0) = a1;
        truth.scores(static_cast<Eigen::Index>(i), 1) = a2;
        for (std::size_t gi = 0; gi < truth.t_grid.size(); ++gi) {
            double t = truth.t_grid[gi];
            truth.curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(gi)) =
                true_mean(t, z) + a1 * true_phi1(t, z) + a2 * true_phi2(t, z);
        }
    }

    LongitudinalDataset data(std::move(subjects), Interval{0.0, 1.0}, Interval{0.0, 1.0});
    return {std::move(data), std::move(truth)};
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    a.count = values.size();
    if (values.empty()) return a;
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::size_t mid = sorted.size() / 2;
    a.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return a;
}

namespace {

const std::vector<double> kSliceZ{0.1, 0.3, 0.5, 0.7, 0.9};

double grid_ise_2d(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   const std::vector<double>& grid) {
    std::vector<double> w = trapezoid_weights(grid);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            double d = a(i, j) - b(i, j);
            acc += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * d * d;
        }
    return acc;
}

struct RunOutcome {
    bool ok = false;
    std::string error;
    // [method][criterion]
    std::vector<std::vector<double>> mise_vals, msfe_vals, k_vals;
    bool has_pooled_cov = false;
    double pooled_cov_ise = 0.0;
    std::array<double, 2> pooled_eigen_bias{0.0, 0.0};
    bool has_slices = false;
    std::vector<double> slice_ise;                      // per kSliceZ
    std::vector<std::array<double, 2>> slice_eigen_bias;  // per kSliceZ
};

}  // namespace

MonteCarloReport run_monte_carlo(const SimConfig& config, const std::vector<FpcaMethod>& methods,
                                 const std::vector<SelectionCriterion>& criteria) {
    if (methods.empty() || criteria.empty())
        throw DomainError("run_monte_carlo: methods and criteria must be nonempty");
    if (config.runs < 1) throw DomainError("run_monte_carlo: need at least one run");

    MonteCarloReport report;
    report.config = config;
    report.methods = methods;
    report.criteria = criteria;

    // exact pooled covariance and its eigenvalues on the pooled grid
    const std::vector<double> pooled_grid = linspace(0.0, 1.0, CovGridSpec::pooled_default().t_points);
    Eigen::MatrixXd pooled_truth(static_cast<Eigen::Index>(pooled_grid.size()),
                                 static_cast<Eigen::Index>(pooled_grid.size()));
    for (std::size_t i = 0; i < pooled_grid.size(); ++i)
        for (std::size_t j = 0; j < pooled_grid.size(); ++j)
            pooled_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                true_gamma_pooled(pooled_grid[i], pooled_grid[j]);
    const EigenSystem pooled_truth_eigen = eigendecompose(pooled_truth, pooled_grid);

    // exact z-slices on the adjusted grid
    const std::vector<double> adj_grid =
        linspace(0.0, 1.0, CovGridSpec::adjusted_default().t_points);
    std::vector<Eigen::MatrixXd> slice_truth(kSliceZ.size());
    for (std::size_t s = 0; s < kSliceZ.size(); ++s) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(adj_grid.size()),
                          static_cast<Eigen::Index>(adj_grid.size()));
        for (std::size_t i = 0; i < adj_grid.size(); ++i)
            for (std::size_t j = 0; j < adj_grid.size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    true_gamma(adj_grid[i], adj_grid[j], kSliceZ[s]);
        slice_truth[s] = std::move(m);
    }

    const Rng root(config.seed);
    std::vector<RunOutcome> outcomes(config.runs);

    parallel_for(config.runs, [&](std::size_t run) {
        RunOutcome& out = outcomes[run];
        out.mise_vals.assign(methods.size(), std::vector<double>(criteria.size(), 0.0));
        out.msfe_vals = out.mise_vals;
        out.k_vals = out.mise_vals;
        try {
            auto [data, truth] = generate_dataset(config, run);
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                FitOptions opts;
                opts.method = methods[mi];
                opts.fve_threshold = config.fve_threshold;
                opts.mean_cv_per_dim = config.cv_per_dim;
                opts.cov_cv_per_dim = config.cv_per_dim;
                opts.cv_folds = config.cv_folds;
                opts.mean_grid.t_points = config.report_t_points;
                opts.seed = root.stream(kRunLabel, run).stream(kFolds, mi).next_u64();

                FittedModel model = fit_model(data, opts);
                for (std::size_t ci = 0; ci < criteria.size(); ++ci) {
                    FpcaFit fit = finalize_fit(data, model, criteria[ci], opts.k_max_ic);
                    out.mise_vals[mi][ci] = mise(truth.curves, fit.predictions, model.t_grid);
                    out.msfe_vals[mi][ci] = fit.msfe_value;
                    out.k_vals[mi][ci] = static_cast<double>(fit.selection.K);
                }

                if (methods[mi] == FpcaMethod::mfpca) {
                    out.has_pooled_cov = true;
                    out.pooled_cov_ise =
                        grid_ise_2d(model.covariance.gamma[0], pooled_truth, pooled_grid);
                    for (std::size_t k = 0; k < 2; ++k) {
                        double est = k < model.pooled_eigen.retained()
                                         ? model.pooled_eigen.eigenvalues[k]
                                         : 0.0;
                        out.pooled_eigen_bias[k] = est - pooled_truth_eigen.eigenvalues[k];
                    }
                } else if (methods[mi] == FpcaMethod::ffpca) {
                    out.has_slices = true;
                    out.slice_ise.resize(kSliceZ.size());
                    out.slice_eigen_bias.resize(kSliceZ.size());
                    for (std::size_t s = 0; s < kSliceZ.size(); ++s) {
                        Eigen::MatrixXd slice = model.covariance.interpolated_slice(kSliceZ[s]);
                        out.slice_ise[s] = grid_ise_2d(slice, slice_truth[s], adj_grid);
                        EigenSystem sys = eigendecompose_adjusted(model.covariance, kSliceZ[s]);
                        double l1 = sys.retained() > 0 ? sys.eigenvalues[0] : 0.0;
                        double l2 = sys.retained() > 1 ? sys.eigenvalues[1] : 0.0;
                        out.slice_eigen_bias[s] = {l1 - true_lambda1(kSliceZ[s]),
                                                   l2 - true_lambda2(kSliceZ[s])};
                    }
                }
            }
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    });

    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t ci = 0; ci < criteria.size(); ++ci)
            report.cells[{methods[mi], criteria[ci]}] = {};

    std::vector<std::vector<std::array<double, 2>>> slice_bias_runs(kSliceZ.size());
    std::vector<std::array<double, 2>> pooled_bias_runs;
    for (std::size_t run = 0; run < config.runs; ++run) {
        const RunOutcome& out = outcomes[run];
        if (!out.ok) {
            report.failures.emplace_back(run, out.error);
            continue;
        }
        ++report.completed_runs;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            for (std::size_t ci = 0; ci < criteria.size(); ++ci) {
                MethodCriterionCell& cell = report.cells[{methods[mi], criteria[ci]}];
                cell.mise_runs.push_back(out.mise_vals[mi][ci]);
                cell.msfe_runs.push_back(out.msfe_vals[mi][ci]);
                cell.k_runs.push_back(out.k_vals[mi][ci]);
            }
        }
        if (out.has_pooled_cov) {
            report.pooled_cov_ise_runs.push_back(out.pooled_cov_ise);
            pooled_bias_runs.push_back(out.pooled_eigen_bias);
        }
        if (out.has_slices)
            for (std::size_t s = 0; s < kSliceZ.size(); ++s)
                slice_bias_runs[s].push_back(out.slice_eigen_bias[s]);
    }

    for (auto& [key, cell] : report.cells) {
        cell.mise = aggregate(cell.mise_runs);
        cell.msfe = aggregate(cell.msfe_runs);
        std::vector<double> kept_mise, kept_msfe;
        double cutoff = 10.0 * cell.mise.median;
        for (std::size_t i = 0; i < cell.mise_runs.size(); ++i) {
            if (cell.mise_runs[i] > cutoff) {
                ++cell.outliers;
            } else {
                kept_mise.push_back(cell.mise_runs[i]);
                kept_msfe.push_back(cell.msfe_runs[i]);
            }
        }
        cell.mise_no_outliers = aggregate(kept_mise);
        cell.msfe_no_outliers = aggregate(kept_msfe);
    }
    report.pooled_cov_ise = aggregate(report.pooled_cov_ise_runs);

    auto bias_stats = [](const std::vector<std::array<double, 2>>& runs, std::size_t k) {
        std::vector<double> v(runs.size());
        for (std::size_t i = 0; i < runs.size(); ++i) v[i] = runs[i][k];
        return aggregate(v);
    };
    if (!pooled_bias_runs.empty()) {
        for (std::size_t k = 0; k < 2; ++k) {
            Aggregate a = bias_stats(pooled_bias_runs, k);
            report.eigenvalue_stats.push_back(EigenvalueStats{0.0, k + 1, a.mean, a.sd});
        }
    }
    if (!slice_bias_runs.empty() && !slice_bias_runs[0].empty()) {
        std::vector<double> ise_tmp;
        for (std::size_t s = 0; s < kSliceZ.size(); ++s) {
            ise_tmp.clear();
            for (const RunOutcome& out : outcomes)
                if (out.ok && out.has_slices) ise_tmp.push_back(out.slice_ise[s]);
            report.slice_ise[kSliceZ[s]] = aggregate(ise_tmp);
            for (std::size_t k = 0; k < 2; ++k) {
                Aggregate a = bias_stats(slice_bias_runs[s], k);
                report.eigenvalue_stats.push_back(EigenvalueStats{kSliceZ[s], k + 1, a.mean, a.sd});
            }
        }
    }
    return report;
}

}  // namespace sim
}  // namespace cafpca
