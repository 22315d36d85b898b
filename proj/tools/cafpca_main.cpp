// cafpca: covariate-adjusted FPCA for sparse longitudinal data.
//
//   cafpca fit      --input data.csv --out DIR [--method mfpca] ...
//   cafpca simulate --out DIR [--runs 100] [--n 100] [--seed S] ...
//
// CAFPCA_THREADS caps worker threads. Errors exit nonzero with a single
// "error: ..." line on stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cafpca/fpca.hpp"
#include "cafpca/report_io.hpp"
#include "cafpca/simulation.hpp"

namespace {

using namespace cafpca;

Bandwidths parse_bandwidths(const std::vector<double>& values, const std::string& flag) {
    if (values.size() == 1) return Bandwidths(values[0]);
    if (values.size() == 2) return Bandwidths(values[0], values[1]);
    throw DomainError(flag + ": expected 1 or 2 comma-separated values");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << text;
}

struct FitArgs {
    std::string input;
    std::string out_dir = ".";
    std::string method = "mfpca";
    std::string criterion = "fve";
    double fve_threshold = 0.80;
    std::uint64_t seed = 1;
    std::vector<double> bw_mean;
    std::vector<double> bw_cov;
    std::vector<std::size_t> grid;
    std::size_t folds = 10;
};

int run_fit(const FitArgs& args) {
    FitOptions opts;
    opts.method = method_from_string(args.method);
    opts.criterion = criterion_from_string(args.criterion);
    opts.fve_threshold = args.fve_threshold;
    opts.seed = args.seed;
    opts.cv_folds = args.folds;
    if (!args.bw_mean.empty()) {
        Bandwidths bw = parse_bandwidths(args.bw_mean, "--bw-mean");
        // unadjusted mean smoothing is 1-D; keep only the time bandwidth
        if (opts.method == FpcaMethod::ufpca && bw.dimension() == 2) bw = Bandwidths(bw[0]);
        opts.mean_bandwidths = bw;
    }
    if (!args.bw_cov.empty()) opts.cov_bandwidths = parse_bandwidths(args.bw_cov, "--bw-cov");
    if (!args.grid.empty()) {
        opts.mean_grid.t_points = args.grid[0];
        if (args.grid.size() > 1) opts.mean_grid.z_points = args.grid[1];
        if (args.grid.size() > 2) throw DomainError("--grid: expected t[,z]");
    }

    LongitudinalDataset data = load_csv(args.input);
    FittedModel model;
    FpcaFit fit = fit_fpca(data, opts, &model);

    std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", fit_report_json(data, model, fit));
    write_mean_grid_csv((dir / "mean_grid.csv").string(), model.mean);
    write_gamma_grid_csv((dir / "gamma_grid.csv").string(), model.covariance);
    write_eigenfunctions_csv((dir / "eigenfunctions.csv").string(), model);
    write_scores_csv((dir / "scores.csv").string(), data, fit);
    write_predictions_csv((dir / "predictions.csv").string(), data, fit);

    std::cout << "fit: method=" << to_string(fit.method) << " K=" << fit.selection.K
              << " sigma2=" << fit.sigma2 << " msfe=" << fit.msfe_value << " -> " << dir.string()
              << "\n";
    return 0;
}

struct SimArgs {
    std::string out_dir = ".";
    std::size_t runs = 100;
    std::size_t n = 100;
    std::uint64_t seed = 20100401;
    double noise_sd = 0.05;
    double fve_threshold = 0.80;
    std::size_t folds = 10;
    bool fixed_design = false;
    std::vector<std::string> methods{"all"};
    std::vector<std::string> criteria{"all"};
};

int run_simulate(const SimArgs& args) {
    sim::SimConfig config;
    config.runs = args.runs;
    config.n = args.n;
    config.seed = args.seed;
    config.noise_sd = args.noise_sd;
    config.fve_threshold = args.fve_threshold;
    config.cv_folds = args.folds;
    config.fixed_design = args.fixed_design;

    std::vector<FpcaMethod> methods;
    for (const std::string& m : args.methods) {
        if (m == "all") {
            methods = {FpcaMethod::ufpca, FpcaMethod::mfpca, FpcaMethod::ffpca};
            break;
        }
        methods.push_back(method_from_string(m));
    }
    std::vector<SelectionCriterion> criteria;
    for (const std::string& c : args.criteria) {
        if (c == "all") {
            criteria = {SelectionCriterion::fve, SelectionCriterion::aic, SelectionCriterion::bic};
            break;
        }
        criteria.push_back(criterion_from_string(c));
    }

    std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);

    // sample replicate (run 0) for inspection
    auto [data, truth] = sim::generate_dataset(config, 0);
    write_csv(data, (dir / "dataset.csv").string());
    write_truth_csv((dir / "truth.csv").string(), data, truth);

    sim::MonteCarloReport report = sim::run_monte_carlo(config, methods, criteria);
    write_text(dir / "mc_report.json", mc_report_json(report));
    write_mc_table2_csv((dir / "table2.csv").string(), report);
    if (!report.slice_ise.empty()) write_mc_table1_csv((dir / "table1.csv").string(), report);

    std::cout << "simulate: runs=" << config.runs << " completed=" << report.completed_runs
              << " failures=" << report.failures.size() << " -> " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariate-adjusted functional principal component analysis"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "fit a model to a longitudinal CSV");
    fit->add_option("-i,--input", fit_args.input, "input CSV (subject_id,covariate,time,value)")
        ->required();
    fit->add_option("-o,--out", fit_args.out_dir, "output directory");
    fit->add_option("--method", fit_args.method, "ufpca|mfpca|ffpca");
    fit->add_option("--criterion", fit_args.criterion, "fve|aic|bic");
    fit->add_option("--fve-threshold", fit_args.fve_threshold, "FVE fraction (default 0.80)");
    fit->add_option("--seed", fit_args.seed, "seed for the k-fold shuffle");
    fit->add_option("--bw-mean", fit_args.bw_mean, "mean bandwidths t[,z]; CV when absent")
        ->delimiter(',');
    fit->add_option("--bw-cov", fit_args.bw_cov, "covariance bandwidths t[,z]; CV when absent")
        ->delimiter(',');
    fit->add_option("--grid", fit_args.grid, "report grid nodes t[,z]")->delimiter(',');
    fit->add_option("--folds", fit_args.folds, "covariance CV folds (default 10)");

    SimArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "run the Monte-Carlo study");
    simulate->add_option("-o,--out", sim_args.out_dir, "output directory");
    simulate->add_option("--runs", sim_args.runs, "replicate count (default 100)");
    simulate->add_option("--n", sim_args.n, "subjects per run (default 100)");
    simulate->add_option("--seed", sim_args.seed, "simulation seed");
    simulate->add_option("--noise-sd", sim_args.noise_sd, "measurement error sd (default 0.05)");
    simulate->add_option("--fve-threshold", sim_args.fve_threshold, "FVE fraction");
    simulate->add_option("--folds", sim_args.folds, "covariance CV folds");
    simulate->add_flag("--fixed-design", sim_args.fixed_design,
                       "share one jittered time grid across runs");
    simulate->add_option("--methods", sim_args.methods, "all or a list of ufpca|mfpca|ffpca")
        ->delimiter(',');
    simulate->add_option("--criteria", sim_args.criteria, "all or a list of fve|aic|bic")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
        if (fit->parsed()) return run_fit(fit_args);
        if (simulate->parsed()) return run_simulate(sim_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
