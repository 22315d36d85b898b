// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cafpca/fpca.hpp"
#include "cafpca/parallel.hpp"
#include "cafpca/report_io.hpp"
#include "cafpca/rng.hpp"
#include "cafpca/simulation.hpp"
#include "oracles.hpp"

using namespace cafpca;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    if (!ok) ++failures;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// ---- criterion 1: polynomial reproduction ---------------------------------

void criterion_1() {
    Rng rng(1001);
    double worst = 0.0;
    for (int dim = 1; dim <= 3; ++dim) {
        std::vector<WeightedSample> samples(500);
        for (auto& s : samples) {
            for (int d = 0; d < dim; ++d) s.x[static_cast<std::size_t>(d)] = rng.uniform01();
            s.y = 0.7 + 1.9 * s.x[0] - 2.4 * s.x[1] + 0.8 * s.x[2];
        }
        Bandwidths bw = dim == 1   ? Bandwidths(0.2)
                        : dim == 2 ? Bandwidths(0.25, 0.25)
                                   : Bandwidths(0.35, 0.35, 0.35);
        KernelSpec spec;
        spec.dimension = dim;
        for (int rep = 0; rep < 100; ++rep) {
            Point target{0, 0, 0};
            for (int d = 0; d < dim; ++d) target[static_cast<std::size_t>(d)] = rng.uniform01();
            double expect = 0.7 + 1.9 * target[0] + (dim >= 2 ? -2.4 * target[1] : 0.0) +
                            (dim >= 3 ? 0.8 * target[2] : 0.0);
            double got = local_poly_fit(samples, target, bw, 1, spec).value;
            worst = std::max(worst, std::abs(got - expect));
        }
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "max abs error %.3g vs 1e-10", worst);
    report(1, "local-linear fits reproduce affine data in 1D/2D/3D", worst <= 1e-10, detail);
}

// ---- criterion 2: oracle equivalence ---------------------------------------

void criterion_2() {
    Rng rng(1002);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        int dim = 1 + rep % 3;
        std::vector<WeightedSample> samples(40 + static_cast<std::size_t>(rng.uniform_int(0, 40)));
        for (auto& s : samples) {
            for (int d = 0; d < dim; ++d) s.x[static_cast<std::size_t>(d)] = rng.uniform01();
            s.y = rng.uniform(-2.0, 2.0);
            s.w = rng.uniform(0.2, 1.8);
        }
        Point target{0, 0, 0};
        for (int d = 0; d < dim; ++d)
            target[static_cast<std::size_t>(d)] = rng.uniform(0.2, 0.8);
        Bandwidths bw = dim == 1   ? Bandwidths(rng.uniform(0.3, 0.7))
                        : dim == 2 ? Bandwidths(rng.uniform(0.4, 0.8), rng.uniform(0.4, 0.8))
                                   : Bandwidths(rng.uniform(0.5, 0.9), rng.uniform(0.5, 0.9),
                                                rng.uniform(0.5, 0.9));
        KernelSpec spec;
        spec.dimension = dim;
        double got = local_poly_fit(samples, target, bw, 1, spec).value;
        Eigen::VectorXd beta = oracles::dense_wls(samples, target, bw, 1, dim);
        worst = std::max(worst, std::abs(got - beta(0)));
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "max |beta0 - oracle| %.3g vs 1e-10", worst);
    report(2, "200 random local fits match the dense weighted LS oracle", worst <= 1e-10, detail);
}

// ---- criterion 3: eigen recovery -------------------------------------------

void criterion_3() {
    std::vector<double> grid = linspace(0.0, 1.0, 101);
    Eigen::MatrixXd gamma(101, 101);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j)
            gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sim::true_gamma(grid[i], grid[j], 0.5);
    EigenSystem sys = eigendecompose(gamma, grid);
    bool ok = sys.retained() >= 2;
    double e1 = ok ? std::abs(sys.eigenvalues[0] - 0.5 / 9.0) : 1.0;
    double e2 = ok ? std::abs(sys.eigenvalues[1] - 0.5 / 36.0) : 1.0;
    double worst_ise = 0.0;
    if (ok) {
        std::vector<double> w = trapezoid_weights(grid);
        for (std::size_t k = 0; k < 2; ++k) {
            double plus = 0.0, minus = 0.0;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double truth =
                    k == 0 ? sim::true_phi1(grid[g], 0.5) : sim::true_phi2(grid[g], 0.5);
                double est = sys.eigenfunctions(static_cast<Eigen::Index>(g),
                                                static_cast<Eigen::Index>(k));
                plus += w[g] * (est - truth) * (est - truth);
                minus += w[g] * (est + truth) * (est + truth);
            }
            worst_ise = std::max(worst_ise, std::min(plus, minus));
        }
    }
    ok = ok && e1 <= 1e-6 && e2 <= 1e-6 && worst_ise <= 1e-6;
    char detail[128];
    std::snprintf(detail, sizeof detail,
                  "lambda errors %.3g, %.3g vs 1e-6; eigenfunction ISE %.3g vs 1e-6", e1, e2,
                  worst_ise);
    report(3, "analytic covariance slice at z=0.5 recovered on a 101-grid", ok, detail);
}

// ---- criterion 4: FVE exactness --------------------------------------------

void criterion_4() {
    bool ok = true;
    for (int i = 1; i <= 100; ++i) {
        double z = static_cast<double>(i) / 100.0;
        std::vector<double> lambda{sim::true_lambda1(z), sim::true_lambda2(z)};
        if (select_k_fve(lambda, 0.80).K != 1) ok = false;
    }
    report(4, "threshold 0.80 selects K=1 for eigenvalues (z/9, z/36) at every z", ok,
           ok ? "K=1 for z = 0.01..1.00" : "some z selected K != 1");
}

// ---- criterion 5: sigma^2 recovery -----------------------------------------

void criterion_5() {
    sim::SimConfig config;
    config.n = 400;
    config.n_min = 20;
    config.n_max = 20;
    config.seed = 1005;
    // fixed pilot-calibrated bandwidths: h_V = 0.22 gives the 1D diagonal
    // smooth the same measured attenuation as the 2D surface at h_G = 0.10
    // (-0.0023 on the trimmed range), so the difference isolates sigma^2
    std::vector<double> estimates(30);
    parallel_for(estimates.size(), [&](std::size_t rep) {
        auto [data, truth] = sim::generate_dataset(config, rep);
        MeanSurface mean = estimate_mean(data, Bandwidths(0.1, 0.25), SmootherKind::local_linear,
                                         MeanMode::covariate_adjusted, {51, 21});
        RawCovariances raw = raw_covariances(data, mean);
        CovarianceModel model =
            estimate_gamma_pooled(raw, 0.10, SmootherKind::local_linear, linspace(0, 1, 51));
        estimate_variance_diag(raw, Bandwidths(0.22), SmootherKind::local_linear, model);
        estimates[rep] = estimate_sigma2(model, data.time_domain());
    });
    double med = median_of(estimates);
    bool ok = med >= 0.002 && med <= 0.003;
    char detail[96];
    std::snprintf(detail, sizeof detail, "median sigma2 %.5f vs [0.0020, 0.0030] over 30 reps", med);
    report(5, "n=400 dense replicates recover sigma^2 = 0.0025 within 20%", ok, detail);
}

// ---- criterion 6: Table-1 analogue -----------------------------------------

void criterion_6() {
    sim::SimConfig config;
    config.n = 100;
    config.runs = 20;
    config.seed = 1006;
    config.cv_per_dim = 4;
    sim::MonteCarloReport rep = sim::run_monte_carlo(config, {FpcaMethod::ffpca},
                                                     {SelectionCriterion::fve});
    double slice_ise = rep.slice_ise.count(0.5) ? rep.slice_ise.at(0.5).mean : 1.0;
    double bias_09 = 1.0, bias_05 = 1.0;
    for (const auto& e : rep.eigenvalue_stats) {
        if (e.component != 1) continue;
        if (e.z == 0.9) bias_09 = e.bias_mean;
        if (e.z == 0.5) bias_05 = e.bias_mean;
    }
    bool ok = rep.completed_runs >= 20 && slice_ise <= 0.002 && bias_09 < 0.0 &&
              bias_05 >= -0.05 && bias_05 <= 0.02;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "slice ISE(z=0.5) %.5f vs <= 0.002; lambda1 bias z=0.9 %.4f (< 0 required), "
                  "z=0.5 %.4f in [-0.05, 0.02]; runs %zu",
                  slice_ise, bias_09, bias_05, rep.completed_runs);
    report(6, "fFPCA covariance slices and eigenvalue biases match Table 1", ok, detail);
}

// ---- criterion 7: Table-2 analogue -----------------------------------------

void criterion_7() {
    sim::SimConfig config;
    config.n = 100;
    config.runs = 60;
    config.seed = 1007;
    config.cv_per_dim = 4;
    sim::MonteCarloReport rep = sim::run_monte_carlo(
        config, {FpcaMethod::ufpca, FpcaMethod::mfpca, FpcaMethod::ffpca},
        {SelectionCriterion::fve, SelectionCriterion::aic, SelectionCriterion::bic});

    double cov_ise = rep.pooled_cov_ise.mean;
    double m_bic = rep.cells.at({FpcaMethod::mfpca, SelectionCriterion::bic}).mise.mean;
    double u_bic = rep.cells.at({FpcaMethod::ufpca, SelectionCriterion::bic}).mise.mean;
    double f_bic = rep.cells.at({FpcaMethod::ffpca, SelectionCriterion::bic}).mise.mean;

    bool ok_cov = cov_ise >= 0.0002 && cov_ise <= 0.0012;
    bool ok_mise = m_bic >= 0.004 && m_bic <= 0.015;
    bool ok_order = u_bic > m_bic && u_bic > f_bic;
    bool ok = rep.completed_runs >= 50 && ok_cov && ok_mise && ok_order;
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "mFPCA cov ISE %.5f vs [0.0002, 0.0012]; mFPCA-BIC MISE %.4f vs [0.004, "
                  "0.015]; ordering uFPCA %.4f > mFPCA %.4f and > fFPCA %.4f; runs %zu",
                  cov_ise, m_bic, u_bic, m_bic, f_bic, rep.completed_runs);
    report(7, "Table-2 analogue over 60 replicates", ok, detail);
}

// ---- criterion 8: empirical convergence rates ------------------------------

void criterion_8() {
    const std::vector<std::size_t> sizes{50, 100, 200};
    std::vector<double> mean_ise_median(sizes.size());
    std::vector<double> cov_ise_median(sizes.size());

    const std::vector<double> pooled_grid = linspace(0.0, 1.0, 51);
    Eigen::MatrixXd pooled_truth(51, 51);
    for (std::size_t i = 0; i < 51; ++i)
        for (std::size_t j = 0; j < 51; ++j)
            pooled_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sim::true_gamma_pooled(pooled_grid[i], pooled_grid[j]);

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        sim::SimConfig config;
        config.n = sizes[si];
        config.seed = 1008;

        // bandwidths CV-selected once per n on replicate 0, then fixed
        auto [pilot, pilot_truth] = sim::generate_dataset(config, 0);
        std::vector<Bandwidths> mc =
            default_mean_candidates(pilot, MeanMode::covariate_adjusted, 4);
        Bandwidths mean_bw =
            locv_bandwidth(pilot, mc, SmootherKind::local_linear, MeanMode::covariate_adjusted);
        MeanSurface pilot_mean = estimate_mean(pilot, mean_bw, SmootherKind::local_linear,
                                               MeanMode::covariate_adjusted, {51, 21});
        std::vector<Bandwidths> cc = default_cov_candidates(pilot, CovarianceKind::pooled, 4);
        Bandwidths cov_bw = kfold_bandwidth(pilot, pilot_mean, cc, 10, CovarianceKind::pooled,
                                            SmootherKind::local_linear, 1008);

        const std::size_t reps = 20;
        std::vector<double> mean_ises(reps), cov_ises(reps);
        parallel_for(reps, [&](std::size_t rep) {
            auto [data, truth] = sim::generate_dataset(config, rep + 1);
            MeanSurface mean = estimate_mean(data, mean_bw, SmootherKind::local_linear,
                                             MeanMode::covariate_adjusted, {51, 21});
            std::vector<double> wt = trapezoid_weights(mean.t_grid());
            std::vector<double> wz = trapezoid_weights(mean.z_grid());
            double ise = 0.0;
            for (std::size_t i = 0; i < mean.t_grid().size(); ++i)
                for (std::size_t j = 0; j < mean.z_grid().size(); ++j) {
                    double d = mean.grid_value(i, j) -
                               sim::true_mean(mean.t_grid()[i], mean.z_grid()[j]);
                    ise += wt[i] * wz[j] * d * d;
                }
            mean_ises[rep] = ise;

            RawCovariances raw = raw_covariances(data, mean);
            CovarianceModel model = estimate_gamma_pooled(raw, cov_bw[0],
                                                          SmootherKind::local_linear, pooled_grid);
            double cise = 0.0;
            for (std::size_t i = 0; i < 51; ++i)
                for (std::size_t j = 0; j < 51; ++j) {
                    double d = model.gamma[0](static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j)) -
                               pooled_truth(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j));
                    cise += wt[i] * wt[j] * d * d;
                }
            cov_ises[rep] = cise;
        });
        mean_ise_median[si] = median_of(mean_ises);
        cov_ise_median[si] = median_of(cov_ises);
    }

    bool ok_mean = mean_ise_median[0] > mean_ise_median[1] && mean_ise_median[1] > mean_ise_median[2];
    bool ok_cov = cov_ise_median[0] > cov_ise_median[1] && cov_ise_median[1] > cov_ise_median[2];
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "mean ISE medians %.3g > %.3g > %.3g; pooled-cov ISE medians %.3g > %.3g > %.3g",
                  mean_ise_median[0], mean_ise_median[1], mean_ise_median[2], cov_ise_median[0],
                  cov_ise_median[1], cov_ise_median[2]);
    report(8, "median ISEs decrease monotonically over n in {50,100,200}", ok_mean && ok_cov,
           detail);
}

// ---- criterion 9: invariant suite ------------------------------------------

void criterion_9() {
    bool ok = true;
    std::string why = "all invariants held";
    auto fail = [&](const std::string& msg) {
        ok = false;
        why = msg;
    };

    sim::SimConfig config;
    config.n = 60;
    config.seed = 1009;
    config.cv_per_dim = 3;
    auto [data, truth] = sim::generate_dataset(config, 0);

    for (FpcaMethod method : {FpcaMethod::mfpca, FpcaMethod::ffpca}) {
        FitOptions opts;
        opts.method = method;
        opts.mean_cv_per_dim = 3;
        opts.cov_cv_per_dim = 3;
        opts.seed = 55;
        FittedModel model = fit_model(data, opts);

        // quadrature orthonormality on every eigen system of the fit
        std::vector<const EigenSystem*> systems;
        if (model.subject_eigen.empty())
            systems.push_back(&model.pooled_eigen);
        else
            for (const auto& sys : model.subject_eigen) systems.push_back(&sys);
        for (const EigenSystem* sys : systems) {
            for (std::size_t a = 0; a < sys->retained(); ++a)
                for (std::size_t b = 0; b <= a; ++b) {
                    double dot = 0.0;
                    for (std::size_t g = 0; g < sys->t_grid.size(); ++g)
                        dot += sys->quad_weights[g] *
                               sys->eigenfunctions(static_cast<Eigen::Index>(g),
                                                   static_cast<Eigen::Index>(a)) *
                               sys->eigenfunctions(static_cast<Eigen::Index>(g),
                                                   static_cast<Eigen::Index>(b));
                    if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-8)
                        fail("orthonormality violated");
                }
        }
        // exact symmetry of every stored gamma grid
        for (const auto& g : model.covariance.gamma)
            if ((g - g.transpose()).cwiseAbs().maxCoeff() != 0.0)
                fail("gamma grid not exactly symmetric");
    }

    // diagonal exclusion, both directions
    {
        FitOptions opts;
        opts.method = FpcaMethod::mfpca;
        opts.mean_bandwidths = Bandwidths(0.3, 0.3);
        opts.cov_bandwidths = Bandwidths(0.3);
        FittedModel model = fit_model(data, opts);
        RawCovariances raw = raw_covariances(data, model.mean);
        CovarianceModel base =
            estimate_gamma_pooled(raw, 0.3, SmootherKind::local_linear, linspace(0, 1, 31));
        estimate_variance_diag(raw, Bandwidths(0.3), SmootherKind::local_linear, base);

        RawCovariances tweaked = raw;
        for (auto& r : tweaked.diagonal) r.value += 7.0;
        CovarianceModel g2 =
            estimate_gamma_pooled(tweaked, 0.3, SmootherKind::local_linear, linspace(0, 1, 31));
        if ((g2.gamma[0] - base.gamma[0]).cwiseAbs().maxCoeff() != 0.0)
            fail("gamma depends on diagonal raw covariances");

        RawCovariances tweaked2 = raw;
        for (auto& r : tweaked2.off_diagonal) r.value -= 3.0;
        CovarianceModel g3 =
            estimate_gamma_pooled(tweaked2, 0.3, SmootherKind::local_linear, linspace(0, 1, 31));
        estimate_variance_diag(tweaked2, Bandwidths(0.3), SmootherKind::local_linear, g3);
        if ((g3.variance_diag - base.variance_diag).cwiseAbs().maxCoeff() != 0.0)
            fail("V depends on off-diagonal raw covariances");
    }

    // score gauge invariance at 1e-12
    {
        EigenSystem sys;
        sys.t_grid = linspace(0.0, 1.0, 41);
        sys.quad_weights = trapezoid_weights(sys.t_grid);
        sys.eigenvalues = {sim::true_lambda1(0.8), sim::true_lambda2(0.8)};
        sys.eigenfunctions.resize(41, 2);
        for (std::size_t g = 0; g < 41; ++g) {
            sys.eigenfunctions(static_cast<Eigen::Index>(g), 0) =
                sim::true_phi1(sys.t_grid[g], 0.8);
            sys.eigenfunctions(static_cast<Eigen::Index>(g), 1) =
                sim::true_phi2(sys.t_grid[g], 0.8);
        }
        Eigen::MatrixXd gamma = sys.reconstructed_gamma();
        Subject subj{"a", 0.8, {{0.12, 0.5}, {0.43, -0.2}, {0.77, 0.35}, {0.91, 0.1}}};
        std::vector<double> mean_at_obs(4, 0.0);
        Eigen::VectorXd s1 = blup_scores(subj, mean_at_obs, sys, gamma, 0.0025, 2);
        EigenSystem flipped = sys;
        flipped.eigenfunctions.col(0) *= -1.0;
        Eigen::VectorXd s2 = blup_scores(subj, mean_at_obs, flipped, gamma, 0.0025, 2);
        if (std::abs(s1(0) + s2(0)) > 1e-12 || std::abs(s1(1) - s2(1)) > 1e-12)
            fail("score gauge invariance violated");
        std::vector<double> zero_mean(sys.t_grid.size(), 0.0);
        std::vector<double> v1{s1(0), s1(1)}, v2{s2(0), s2(1)};
        std::vector<double> p1 = predict_trajectory(zero_mean, sys, v1, 2, sys.t_grid);
        std::vector<double> p2 = predict_trajectory(zero_mean, flipped, v2, 2, sys.t_grid);
        for (std::size_t g = 0; g < p1.size(); ++g)
            if (std::abs(p1[g] - p2[g]) > 1e-12) fail("prediction changed under sign flip");
    }

    // seeded determinism, byte-exact
    {
        sim::SimConfig mc;
        mc.n = 30;
        mc.runs = 2;
        mc.seed = 424242;
        mc.cv_per_dim = 3;
        sim::MonteCarloReport r1 =
            sim::run_monte_carlo(mc, {FpcaMethod::mfpca}, {SelectionCriterion::fve});
        sim::MonteCarloReport r2 =
            sim::run_monte_carlo(mc, {FpcaMethod::mfpca}, {SelectionCriterion::fve});
        if (mc_report_json(r1) != mc_report_json(r2)) fail("monte carlo report not byte-exact");
    }

    report(9, "invariant suite (orthonormality, symmetry, exclusion, gauge, determinism)", ok,
           why);
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    auto seconds =
        std::chrono::duration_cast<std::chrono::seconds>(clock::now() - t0).count();
    std::printf("%d of 9 criteria passed in %llds\n", 9 - failures,
                static_cast<long long>(seconds));
    return failures == 0 ? 0 : 1;
}
