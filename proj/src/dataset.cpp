#include "cafpca/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "cafpca/errors.hpp"

namespace cafpca {

LongitudinalDataset::LongitudinalDataset(std::vector<Subject> subjects, Interval time_domain,
                                         Interval covariate_domain)
    : subjects_(std::move(subjects)), time_domain_(time_domain), covariate_domain_(covariate_domain) {
    if (subjects_.size() < 2) throw IntegrityError("dataset: need at least 2 subjects");
    if (!(time_domain_.lo < time_domain_.hi) || !std::isfinite(time_domain_.lo) ||
        !std::isfinite(time_domain_.hi))
        throw DomainError("dataset: degenerate time domain");
    if (!(covariate_domain_.lo < covariate_domain_.hi) || !std::isfinite(covariate_domain_.lo) ||
        !std::isfinite(covariate_domain_.hi))
        throw DomainError("dataset: degenerate covariate domain");
    for (Subject& s : subjects_) {
        if (s.observations.empty())
            throw IntegrityError("dataset: subject '" + s.id + "' has no observations");
        if (!std::isfinite(s.covariate) || !covariate_domain_.contains(s.covariate))
            throw DomainError("dataset: covariate of subject '" + s.id + "' outside domain");
        std::stable_sort(s.observations.begin(), s.observations.end(),
                         [](const Observation& a, const Observation& b) { return a.time < b.time; });
        for (const Observation& o : s.observations) {
            if (!std::isfinite(o.time) || !time_domain_.contains(o.time))
                throw DomainError("dataset: time of subject '" + s.id + "' outside domain");
            if (!std::isfinite(o.value))
                throw DomainError("dataset: non-finite value for subject '" + s.id + "'");
        }
        total_observations_ += s.observations.size();
    }
}

LongitudinalDataset LongitudinalDataset::from_subjects(std::vector<Subject> subjects,
                                                       std::optional<Interval> time_domain,
                                                       std::optional<Interval> covariate_domain) {
    if (!time_domain || !covariate_domain) {
        double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
        double z_lo = t_lo, z_hi = -t_lo;
        for (const Subject& s : subjects) {
            z_lo = std::min(z_lo, s.covariate);
            z_hi = std::max(z_hi, s.covariate);
            for (const Observation& o : s.observations) {
                t_lo = std::min(t_lo, o.time);
                t_hi = std::max(t_hi, o.time);
            }
        }
        if (!time_domain) time_domain = Interval{t_lo, t_hi};
        if (!covariate_domain) covariate_domain = Interval{z_lo, z_hi};
    }
    return LongitudinalDataset(std::move(subjects), *time_domain, *covariate_domain);
}

DatasetSummary summary(const LongitudinalDataset& data) {
    DatasetSummary s;
    s.n_subjects = data.size();
    s.time_domain = data.time_domain();
    s.covariate_domain = data.covariate_domain();
    s.min_obs_per_subject = std::numeric_limits<std::size_t>::max();
    for (const Subject& subj : data.subjects()) {
        std::size_t m = subj.observations.size();
        s.total_observations += m;
        s.min_obs_per_subject = std::min(s.min_obs_per_subject, m);
        s.max_obs_per_subject = std::max(s.max_obs_per_subject, m);
    }
    s.mean_obs_per_subject =
        static_cast<double>(s.total_observations) / static_cast<double>(s.n_subjects);
    return s;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& field, std::size_t row, const std::string& column) {
    std::string t = trim(field);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParseError("row " + std::to_string(row) + ": non-numeric '" + field + "' in column '" +
                         column + "'");
    return out;
}

}  // namespace

LongitudinalDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input: '" + path + "'");
    std::vector<std::string> header = split_csv_row(line);
    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        throw ParseError("missing column '" + name + "' in '" + path + "'");
    };
    const std::size_t c_id = column_of(schema.subject_column);
    const std::size_t c_z = column_of(schema.covariate_column);
    const std::size_t c_t = column_of(schema.time_column);
    const std::size_t c_y = column_of(schema.value_column);

    std::vector<Subject> subjects;
    std::unordered_map<std::string, std::size_t> index_of;
    std::size_t row = 1;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        any_row = true;
        std::vector<std::string> fields = split_csv_row(line);
        std::size_t needed = std::max(std::max(c_id, c_z), std::max(c_t, c_y));
        if (fields.size() <= needed)
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(needed + 1) + " fields, got " +
                             std::to_string(fields.size()));
        std::string id = trim(fields[c_id]);
        double z = parse_number(fields[c_z], row, schema.covariate_column);
        double t = parse_number(fields[c_t], row, schema.time_column);
        double y = parse_number(fields[c_y], row, schema.value_column);

        auto it = index_of.find(id);
        if (it == index_of.end()) {
            index_of.emplace(id, subjects.size());
            subjects.push_back(Subject{id, z, {}});
            it = index_of.find(id);
        } else if (subjects[it->second].covariate != z) {
            throw IntegrityError("row " + std::to_string(row) + ": subject '" + id +
                                 "' has conflicting covariate values");
        }
        subjects[it->second].observations.push_back(Observation{t, y});
    }
    if (!any_row) throw ParseError("empty input: '" + path + "' has a header but no rows");

    return LongitudinalDataset::from_subjects(std::move(subjects), schema.time_domain,
                                              schema.covariate_domain);
}

void write_csv(const LongitudinalDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "subject_id,covariate,time,value\n";
    char buf[96];
    for (const Subject& s : data.subjects()) {
        for (const Observation& o : s.observations) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", s.covariate, o.time, o.value);
            out << s.id << ',' << buf << '\n';
        }
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace cafpca
