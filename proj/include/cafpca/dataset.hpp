#ifndef CAFPCA_DATASET_HPP
#define CAFPCA_DATASET_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cafpca/grid.hpp"

namespace cafpca {

// One measurement (T_ij, Y_ij) of a subject.
struct Observation {
    double time = 0.0;
    double value = 0.0;
};

// A subject: opaque id, scalar covariate, and its observations sorted by time.
struct Subject {
    std::string id;
    double covariate = 0.0;
    std::vector<Observation> observations;
};

// Sparse longitudinal data with known compact time and covariate domains.
// Immutable after construction and safe to share across threads.
class LongitudinalDataset {
public:
    // Validates and takes ownership: n >= 2 subjects, nondegenerate domains,
    // every time/covariate/value finite and inside its domain, at least one
    // observation per subject. Observation times are sorted on ingest.
    LongitudinalDataset(std::vector<Subject> subjects, Interval time_domain,
                        Interval covariate_domain);

    // Domains default to the observed extremes when not supplied.
    static LongitudinalDataset from_subjects(std::vector<Subject> subjects,
                                             std::optional<Interval> time_domain = std::nullopt,
                                             std::optional<Interval> covariate_domain = std::nullopt);

    const std::vector<Subject>& subjects() const { return subjects_; }
    const Subject& subject(std::size_t i) const { return subjects_[i]; }
    std::size_t size() const { return subjects_.size(); }
    const Interval& time_domain() const { return time_domain_; }
    const Interval& covariate_domain() const { return covariate_domain_; }
    std::size_t total_observations() const { return total_observations_; }

private:
    std::vector<Subject> subjects_;
    Interval time_domain_;
    Interval covariate_domain_;
    std::size_t total_observations_ = 0;
};

struct DatasetSummary {
    std::size_t n_subjects = 0;
    std::size_t total_observations = 0;
    std::size_t min_obs_per_subject = 0;
    std::size_t max_obs_per_subject = 0;
    double mean_obs_per_subject = 0.0;
    Interval time_domain;
    Interval covariate_domain;
};

DatasetSummary summary(const LongitudinalDataset& data);

// Column mapping and optional domain overrides for CSV ingestion.
struct CsvSchema {
    std::string subject_column = "subject_id";
    std::string covariate_column = "covariate";
    std::string time_column = "time";
    std::string value_column = "value";
    std::optional<Interval> time_domain;
    std::optional<Interval> covariate_domain;
};

// Reads a comma-separated file with a header row. Rows are grouped by subject
// id in order of first appearance; the covariate must be constant within a
// subject. Parse failures report the 1-based file row.
LongitudinalDataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Writes `subject_id,covariate,time,value` rows with 17 significant digits,
// enough for an exact round-trip through load_csv.
void write_csv(const LongitudinalDataset& data, const std::string& path);

}  // namespace cafpca

#endif  // CAFPCA_DATASET_HPP
