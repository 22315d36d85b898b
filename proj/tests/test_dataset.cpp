#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "cafpca/dataset.hpp"
#include "cafpca/errors.hpp"
#include "cafpca/rng.hpp"
#include "cafpca/simulation.hpp"

using namespace cafpca;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

LongitudinalDataset random_dataset(Rng& rng, std::size_t n) {
    std::vector<Subject> subjects(n);
    for (std::size_t i = 0; i < n; ++i) {
        subjects[i].id = "id" + std::to_string(i);
        subjects[i].covariate = rng.uniform(-3.0, 5.0);
        std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 7));
        for (std::size_t j = 0; j < m; ++j)
            subjects[i].observations.push_back(
                {rng.uniform(0.0, 10.0), rng.normal(0.0, 2.0)});
    }
    return LongitudinalDataset::from_subjects(std::move(subjects));
}

}  // namespace

TEST_CASE("load_csv groups rows by subject") {
    std::string path = temp_path("cafpca_ds1.csv");
    write_file(path,
               "subject_id,covariate,time,value\n"
               "a,0.3,0.1,1.0\n"
               "b,0.7,0.5,2.0\n"
               "a,0.3,0.2,3.0\n");
    LongitudinalDataset data = load_csv(path);
    CHECK(data.size() == 2);
    CHECK(data.total_observations() == 3);
    CHECK(data.subject(0).id == "a");
    CHECK(data.subject(0).observations.size() == 2);
    CHECK(data.subject(1).observations.size() == 1);
}

TEST_CASE("conflicting covariate within a subject is an integrity error") {
    std::string path = temp_path("cafpca_ds2.csv");
    write_file(path,
               "subject_id,covariate,time,value\n"
               "a,0.3,0.1,1.0\n"
               "a,0.4,0.2,2.0\n"
               "b,0.5,0.3,3.0\n");
    CHECK_THROWS_AS((void)load_csv(path), IntegrityError);
}

TEST_CASE("parse errors carry the row number; empty inputs are rejected") {
    std::string path = temp_path("cafpca_ds3.csv");
    write_file(path,
               "subject_id,covariate,time,value\n"
               "a,0.3,0.1,1.0\n"
               "b,0.5,oops,2.0\n");
    try {
        (void)load_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }

    write_file(path, "");
    CHECK_THROWS_AS((void)load_csv(path), ParseError);
    write_file(path, "subject_id,covariate,time,value\n");
    CHECK_THROWS_AS((void)load_csv(path), ParseError);
    write_file(path, "id,z,t,y\na,0.3,0.1,1.0\n");
    CHECK_THROWS_AS((void)load_csv(path), ParseError);  // missing columns

    CsvSchema renamed;
    renamed.subject_column = "id";
    renamed.covariate_column = "z";
    renamed.time_column = "t";
    renamed.value_column = "y";
    write_file(path, "id,z,t,y\na,0.3,0.1,1.0\nb,0.5,0.2,2.0\n");
    CHECK(load_csv(path, renamed).size() == 2);
}

TEST_CASE("csv round-trip reproduces the dataset exactly") {
    Rng rng(314);
    for (int rep = 0; rep < 5; ++rep) {
        LongitudinalDataset data = random_dataset(rng, 2 + static_cast<std::size_t>(rep) * 3);
        std::string path = temp_path("cafpca_rt.csv");
        write_csv(data, path);
        LongitudinalDataset back = load_csv(path);
        REQUIRE(back.size() == data.size());
        CHECK(back.time_domain().lo == data.time_domain().lo);
        CHECK(back.time_domain().hi == data.time_domain().hi);
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(back.subject(i).id == data.subject(i).id);
            CHECK(back.subject(i).covariate == data.subject(i).covariate);
            REQUIRE(back.subject(i).observations.size() == data.subject(i).observations.size());
            for (std::size_t j = 0; j < data.subject(i).observations.size(); ++j) {
                CHECK(back.subject(i).observations[j].time ==
                      data.subject(i).observations[j].time);
                CHECK(back.subject(i).observations[j].value ==
                      data.subject(i).observations[j].value);
            }
        }
    }
}

TEST_CASE("ingest sorts observation times and validates domains") {
    std::vector<Subject> subjects{{"a", 0.5, {{0.9, 1.0}, {0.1, 2.0}, {0.5, 3.0}}},
                                  {"b", 0.2, {{0.4, 1.0}}}};
    LongitudinalDataset data = LongitudinalDataset::from_subjects(subjects);
    CHECK(data.subject(0).observations[0].time == 0.1);
    CHECK(data.subject(0).observations[1].time == 0.5);
    CHECK(data.subject(0).observations[2].time == 0.9);

    CHECK_THROWS_AS(LongitudinalDataset(subjects, Interval{0.0, 0.5}, Interval{0.0, 1.0}),
                    DomainError);  // time 0.9 outside
    CHECK_THROWS_AS(LongitudinalDataset(subjects, Interval{0.0, 1.0}, Interval{0.3, 1.0}),
                    DomainError);  // covariate 0.2 outside
    CHECK_THROWS_AS(LongitudinalDataset({subjects[0]}, Interval{0.0, 1.0}, Interval{0.0, 1.0}),
                    IntegrityError);  // n < 2
    std::vector<Subject> with_empty = subjects;
    with_empty.push_back({"c", 0.4, {}});
    CHECK_THROWS_AS(LongitudinalDataset::from_subjects(with_empty), IntegrityError);
}

TEST_CASE("summary counts match a brute-force recount") {
    std::vector<Subject> subjects{{"a", 0.1, {{0.1, 1.0}, {0.2, 2.0}}},
                                  {"b", 0.9, {{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0},
                                              {0.4, 4.0}, {0.5, 5.0}, {0.6, 6.0},
                                              {0.7, 7.0}, {0.8, 8.0}, {0.85, 9.0},
                                              {0.9, 10.0}}}};
    DatasetSummary s = summary(LongitudinalDataset::from_subjects(subjects));
    CHECK(s.n_subjects == 2);
    CHECK(s.total_observations == 12);
    CHECK(s.min_obs_per_subject == 2);
    CHECK(s.max_obs_per_subject == 10);
    CHECK(s.mean_obs_per_subject == doctest::Approx(6.0));

    std::vector<Subject> singles{{"a", 0.1, {{0.1, 1.0}}}, {"b", 0.2, {{0.2, 1.0}}}};
    DatasetSummary s1 = summary(LongitudinalDataset::from_subjects(singles));
    CHECK(s1.min_obs_per_subject == 1);
    CHECK(s1.max_obs_per_subject == 1);
    CHECK(s1.mean_obs_per_subject == doctest::Approx(1.0));
}

TEST_CASE("simulated design has mean observations per subject near 6") {
    sim::SimConfig config;
    config.n = 100;
    config.seed = 99;
    auto [data, truth] = sim::generate_dataset(config, 0);
    DatasetSummary s = summary(data);
    CHECK(s.n_subjects == 100);
    CHECK(s.min_obs_per_subject >= 2);
    CHECK(s.max_obs_per_subject <= 10);
    CHECK(s.mean_obs_per_subject > 6.0 - 0.8);
    CHECK(s.mean_obs_per_subject < 6.0 + 0.8);
}
