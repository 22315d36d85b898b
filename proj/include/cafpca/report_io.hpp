#ifndef CAFPCA_REPORT_IO_HPP
#define CAFPCA_REPORT_IO_HPP

#include <string>
#include <vector>

#include "cafpca/fpca.hpp"
#include "cafpca/simulation.hpp"

namespace cafpca {

std::string to_string(FpcaMethod m);
std::string to_string(SelectionCriterion c);
FpcaMethod method_from_string(const std::string& s);
SelectionCriterion criterion_from_string(const std::string& s);

// Generic comma-separated table with a header row; numeric access on demand.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv_table(const std::string& path);

// Fit outputs (CSV grids carry 17 significant digits; report.json is
// byte-deterministic for identical inputs and seed).
void write_mean_grid_csv(const std::string& path, const MeanSurface& mean);
void write_gamma_grid_csv(const std::string& path, const CovarianceModel& cov);
void write_eigenfunctions_csv(const std::string& path, const FittedModel& model);
void write_scores_csv(const std::string& path, const LongitudinalDataset& data, const FpcaFit& fit);
void write_predictions_csv(const std::string& path, const LongitudinalDataset& data,
                           const FpcaFit& fit);
std::string fit_report_json(const LongitudinalDataset& data, const FittedModel& model,
                            const FpcaFit& fit);

// Monte-Carlo outputs.
std::string mc_report_json(const sim::MonteCarloReport& report);
void write_mc_table1_csv(const std::string& path, const sim::MonteCarloReport& report);
void write_mc_table2_csv(const std::string& path, const sim::MonteCarloReport& report);
void write_truth_csv(const std::string& path, const LongitudinalDataset& data,
                     const sim::SimTruth& truth);

}  // namespace cafpca

#endif  // CAFPCA_REPORT_IO_HPP
