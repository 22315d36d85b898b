#include "cafpca/report_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cafpca/errors.hpp"

namespace cafpca {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    return out;
}

}  // namespace

std::string to_string(FpcaMethod m) {
    switch (m) {
        case FpcaMethod::ufpca: return "ufpca";
        case FpcaMethod::mfpca: return "mfpca";
        case FpcaMethod::ffpca: return "ffpca";
    }
    return "?";
}

std::string to_string(SelectionCriterion c) {
    switch (c) {
        case SelectionCriterion::fve: return "fve";
        case SelectionCriterion::aic: return "aic";
        case SelectionCriterion::bic: return "bic";
    }
    return "?";
}

FpcaMethod method_from_string(const std::string& s) {
    if (s == "ufpca") return FpcaMethod::ufpca;
    if (s == "mfpca") return FpcaMethod::mfpca;
    if (s == "ffpca") return FpcaMethod::ffpca;
    throw DomainError("unknown method '" + s + "' (expected ufpca|mfpca|ffpca)");
}

SelectionCriterion criterion_from_string(const std::string& s) {
    if (s == "fve") return SelectionCriterion::fve;
    if (s == "aic") return SelectionCriterion::aic;
    if (s == "bic") return SelectionCriterion::bic;
    throw DomainError("unknown criterion '" + s + "' (expected fve|aic|bic)");
}

std::size_t CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw ParseError("csv table: no column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("csv table: non-numeric cell '" + cell + "'");
    return out;
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = s.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(s.substr(start));
                break;
            }
            fields.push_back(s.substr(start, comma - start));
            start = comma + 1;
        }
        if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
            fields.back().pop_back();
        return fields;
    };
    if (!std::getline(in, line)) throw ParseError("empty csv '" + path + "'");
    table.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(split(line));
    }
    return table;
}

void write_mean_grid_csv(const std::string& path, const MeanSurface& mean) {
    std::ofstream out = open_out(path);
    if (mean.mode() == MeanMode::covariate_adjusted) {
        out << "t,z,mu_hat\n";
        for (std::size_t i = 0; i < mean.t_grid().size(); ++i)
            for (std::size_t j = 0; j < mean.z_grid().size(); ++j)
                out << fmt(mean.t_grid()[i]) << ',' << fmt(mean.z_grid()[j]) << ','
                    << fmt(mean.grid_value(i, j)) << '\n';
    } else {
        out << "t,mu_hat\n";
        for (std::size_t i = 0; i < mean.t_grid().size(); ++i)
            out << fmt(mean.t_grid()[i]) << ',' << fmt(mean.grid_value(i, 0)) << '\n';
    }
}

void write_gamma_grid_csv(const std::string& path, const CovarianceModel& cov) {
    std::ofstream out = open_out(path);
    if (cov.kind == CovarianceKind::covariate_adjusted) {
        out << "t,s,z,gamma\n";
        for (std::size_t m = 0; m < cov.z_grid.size(); ++m)
            for (std::size_t i = 0; i < cov.t_grid.size(); ++i)
                for (std::size_t j = 0; j < cov.t_grid.size(); ++j)
                    out << fmt(cov.t_grid[i]) << ',' << fmt(cov.t_grid[j]) << ','
                        << fmt(cov.z_grid[m]) << ','
                        << fmt(cov.gamma[m](static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)))
                        << '\n';
    } else {
        out << "t,s,gamma\n";
        for (std::size_t i = 0; i < cov.t_grid.size(); ++i)
            for (std::size_t j = 0; j < cov.t_grid.size(); ++j)
                out << fmt(cov.t_grid[i]) << ',' << fmt(cov.t_grid[j]) << ','
                    << fmt(cov.gamma[0](static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)))
                    << '\n';
    }
}

void write_eigenfunctions_csv(const std::string& path, const FittedModel& model) {
    std::ofstream out = open_out(path);
    if (model.covariance.kind == CovarianceKind::pooled) {
        out << "component,t,phi\n";
        const EigenSystem& sys = model.pooled_eigen;
        for (std::size_t k = 0; k < sys.retained(); ++k)
            for (std::size_t g = 0; g < sys.t_grid.size(); ++g)
                out << (k + 1) << ',' << fmt(sys.t_grid[g]) << ','
                    << fmt(sys.eigenfunctions(static_cast<Eigen::Index>(g),
                                              static_cast<Eigen::Index>(k)))
                    << '\n';
        return;
    }
    out << "component,t,z,phi\n";
    for (std::size_t m = 0; m < model.covariance.z_grid.size(); ++m) {
        EigenSystem sys = eigendecompose_adjusted(model.covariance, model.covariance.z_grid[m]);
        for (std::size_t k = 0; k < sys.retained(); ++k)
            for (std::size_t g = 0; g < sys.t_grid.size(); ++g)
                out << (k + 1) << ',' << fmt(sys.t_grid[g]) << ','
                    << fmt(model.covariance.z_grid[m]) << ','
                    << fmt(sys.eigenfunctions(static_cast<Eigen::Index>(g),
                                              static_cast<Eigen::Index>(k)))
                    << '\n';
    }
}

void write_scores_csv(const std::string& path, const LongitudinalDataset& data,
                      const FpcaFit& fit) {
    std::ofstream out = open_out(path);
    out << "subject_id,component,score\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t k = 0; k < fit.scores[i].size(); ++k)
            out << data.subject(i).id << ',' << (k + 1) << ',' << fmt(fit.scores[i][k]) << '\n';
}

void write_predictions_csv(const std::string& path, const LongitudinalDataset& data,
                           const FpcaFit& fit) {
    std::ofstream out = open_out(path);
    out << "subject_id,t,prediction\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t g = 0; g < fit.t_grid.size(); ++g)
            out << data.subject(i).id << ',' << fmt(fit.t_grid[g]) << ','
                << fmt(fit.predictions(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(g)))
                << '\n';
}

std::string fit_report_json(const LongitudinalDataset& data, const FittedModel& model,
                            const FpcaFit& fit) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["method"] = to_string(fit.method);
    j["criterion"] = to_string(fit.selection.criterion);
    j["n_subjects"] = data.size();
    j["total_observations"] = data.total_observations();
    j["K"] = fit.selection.K;
    if (!fit.selection.per_subject_k.empty())
        j["per_subject_k"] = fit.selection.per_subject_k;
    if (fit.selection.criterion == SelectionCriterion::fve)
        j["fve_threshold"] = fit.selection.threshold;
    j["sigma2"] = fit.sigma2;
    j["msfe"] = fit.msfe_value;

    nlohmann::ordered_json bw;
    {
        nlohmann::ordered_json m = nlohmann::ordered_json::array();
        for (int d = 0; d < model.mean.bandwidths().dimension(); ++d)
            m.push_back(model.mean.bandwidths()[d]);
        bw["mean"] = m;
        nlohmann::ordered_json c = nlohmann::ordered_json::array();
        for (int d = 0; d < model.covariance.bandwidths.dimension(); ++d)
            c.push_back(model.covariance.bandwidths[d]);
        bw["covariance"] = c;
    }
    j["bandwidths"] = bw;

    if (model.covariance.kind == CovarianceKind::pooled) {
        j["eigenvalues"] = model.pooled_eigen.eigenvalues;
    } else {
        nlohmann::ordered_json per_z = nlohmann::ordered_json::array();
        for (double z : model.covariance.z_grid) {
            EigenSystem sys = eigendecompose_adjusted(model.covariance, z);
            nlohmann::ordered_json e;
            e["z"] = z;
            e["eigenvalues"] = sys.eigenvalues;
            per_z.push_back(e);
        }
        j["eigenvalues_by_z"] = per_z;
    }
    return j.dump(2) + "\n";
}

std::string mc_report_json(const sim::MonteCarloReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["config"] = {{"n", report.config.n},
                   {"runs", report.config.runs},
                   {"seed", report.config.seed},
                   {"noise_sd", report.config.noise_sd},
                   {"grid_points", report.config.grid_points},
                   {"n_min", report.config.n_min},
                   {"n_max", report.config.n_max},
                   {"fve_threshold", report.config.fve_threshold},
                   {"fixed_design", report.config.fixed_design},
                   {"cv_per_dim", report.config.cv_per_dim},
                   {"cv_folds", report.config.cv_folds}};
    j["completed_runs"] = report.completed_runs;
    nlohmann::ordered_json fails = nlohmann::ordered_json::array();
    for (const auto& [run, msg] : report.failures)
        fails.push_back({{"run", run}, {"error", msg}});
    j["failures"] = fails;

    auto agg_json = [](const sim::Aggregate& a) {
        return nlohmann::ordered_json{
            {"mean", a.mean}, {"median", a.median}, {"sd", a.sd}, {"count", a.count}};
    };

    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& [key, cell] : report.cells) {
        nlohmann::ordered_json c;
        c["method"] = to_string(key.first);
        c["criterion"] = to_string(key.second);
        c["mise"] = agg_json(cell.mise);
        c["mise_excluding_outliers"] = agg_json(cell.mise_no_outliers);
        c["msfe"] = agg_json(cell.msfe);
        c["msfe_excluding_outliers"] = agg_json(cell.msfe_no_outliers);
        c["outliers"] = cell.outliers;
        c["k_mean"] = sim::aggregate(cell.k_runs).mean;
        cells.push_back(c);
    }
    j["results"] = cells;

    if (report.pooled_cov_ise.count > 0) j["pooled_covariance_ise"] = agg_json(report.pooled_cov_ise);
    if (!report.slice_ise.empty()) {
        nlohmann::ordered_json slices = nlohmann::ordered_json::array();
        for (const auto& [z, a] : report.slice_ise)
            slices.push_back({{"z", z}, {"ise", agg_json(a)}});
        j["gamma_slice_ise"] = slices;
    }
    if (!report.eigenvalue_stats.empty()) {
        nlohmann::ordered_json ev = nlohmann::ordered_json::array();
        for (const auto& s : report.eigenvalue_stats) {
            nlohmann::ordered_json e;
            e["kind"] = s.z == 0.0 ? "pooled" : "slice";
            if (s.z != 0.0) e["z"] = s.z;
            e["component"] = s.component;
            e["bias_mean"] = s.bias_mean;
            e["bias_sd"] = s.bias_sd;
            ev.push_back(e);
        }
        j["eigenvalue_bias"] = ev;
    }
    return j.dump(2) + "\n";
}

void write_mc_table1_csv(const std::string& path, const sim::MonteCarloReport& report) {
    std::ofstream out = open_out(path);
    out << "z,gamma_ise_mean,gamma_ise_sd,lambda1_bias,lambda1_sd,lambda2_bias,lambda2_sd\n";
    for (const auto& [z, a] : report.slice_ise) {
        double b1 = 0, s1 = 0, b2 = 0, s2 = 0;
        for (const auto& e : report.eigenvalue_stats) {
            if (e.z != z) continue;
            if (e.component == 1) {
                b1 = e.bias_mean;
                s1 = e.bias_sd;
            } else if (e.component == 2) {
                b2 = e.bias_mean;
                s2 = e.bias_sd;
            }
        }
        out << fmt(z) << ',' << fmt(a.mean) << ',' << fmt(a.sd) << ',' << fmt(b1) << ',' << fmt(s1)
            << ',' << fmt(b2) << ',' << fmt(s2) << '\n';
    }
}

void write_mc_table2_csv(const std::string& path, const sim::MonteCarloReport& report) {
    std::ofstream out = open_out(path);
    out << "method,criterion,mise_mean,mise_mean_excl_outliers,mise_median,mise_sd,"
           "msfe_mean,msfe_mean_excl_outliers,msfe_median,msfe_sd,k_mean,outliers,runs\n";
    for (const auto& [key, cell] : report.cells) {
        out << to_string(key.first) << ',' << to_string(key.second) << ',' << fmt(cell.mise.mean)
            << ',' << fmt(cell.mise_no_outliers.mean) << ',' << fmt(cell.mise.median) << ','
            << fmt(cell.mise.sd) << ',' << fmt(cell.msfe.mean) << ','
            << fmt(cell.msfe_no_outliers.mean) << ',' << fmt(cell.msfe.median) << ','
            << fmt(cell.msfe.sd) << ',' << fmt(sim::aggregate(cell.k_runs).mean) << ','
            << cell.outliers << ',' << cell.mise.count << '\n';
    }
}

void write_truth_csv(const std::string& path, const LongitudinalDataset& data,
                     const sim::SimTruth& truth) {
    std::ofstream out = open_out(path);
    out << "subject_id,z,t,x_true\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t g = 0; g < truth.t_grid.size(); ++g)
            out << data.subject(i).id << ',' << fmt(truth.z[i]) << ',' << fmt(truth.t_grid[g])
                << ','
                << fmt(truth.curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)))
                << '\n';
}

}  // namespace cafpca
