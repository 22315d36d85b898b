#include "cafpca/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cafpca/errors.hpp"
#include "cafpca/parallel.hpp"
#include "cafpca/rng.hpp"

namespace cafpca {

namespace {

int degree_of(SmootherKind k) { return k == SmootherKind::local_linear ? 1 : 0; }

std::vector<WeightedSample> off_diag_samples(const RawCovariances& raw, CovarianceKind kind) {
    std::vector<WeightedSample> s;
    s.reserve(raw.off_diagonal.size());
    for (const RawCovRecord& r : raw.off_diagonal) {
        double z = kind == CovarianceKind::covariate_adjusted ? r.z : 0.0;
        s.push_back(WeightedSample{{r.t1, r.t2, z}, r.value, 1.0});
    }
    return s;
}

void symmetrize(Eigen::MatrixXd& g) { g = ((g + g.transpose()) * 0.5).eval(); }

}  // namespace

RawCovariances raw_covariances(const LongitudinalDataset& data, const MeanSurface& mean) {
    const auto& fitted = mean.fitted_at_obs();
    if (fitted.size() != data.size())
        throw IntegrityError("raw_covariances: mean was fitted on a different dataset");

    RawCovariances raw;
    std::size_t n_off = 0;
    for (const Subject& s : data.subjects()) {
        std::size_t m = s.observations.size();
        n_off += m * (m - 1);
    }
    raw.off_diagonal.reserve(n_off);
    raw.diagonal.reserve(data.total_observations());

    for (std::size_t i = 0; i < data.size(); ++i) {
        const Subject& s = data.subject(i);
        const std::size_t m = s.observations.size();
        if (fitted[i].size() != m)
            throw IntegrityError("raw_covariances: mean fit count mismatch for subject '" + s.id +
                                 "'");
        std::vector<double> resid(m);
        for (std::size_t j = 0; j < m; ++j) resid[j] = s.observations[j].value - fitted[i][j];
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < m; ++k) {
                if (j == k) continue;
                raw.off_diagonal.push_back(RawCovRecord{i, s.observations[j].time,
                                                        s.observations[k].time, s.covariate,
                                                        resid[j] * resid[k]});
            }
            raw.diagonal.push_back(RawDiagRecord{i, s.observations[j].time, s.covariate,
                                                 resid[j] * resid[j]});
        }
    }
    return raw;
}

double CovarianceModel::gamma_at(double t, double s, std::size_t z_index) const {
    const Eigen::MatrixXd& g = gamma.at(z_index);
    GridBracket bt = bracket(t_grid, t);
    GridBracket bs = bracket(t_grid, s);
    auto i = static_cast<Eigen::Index>(bt.index);
    auto j = static_cast<Eigen::Index>(bs.index);
    double g00 = g(i, j), g10 = g(i + 1, j), g01 = g(i, j + 1), g11 = g(i + 1, j + 1);
    double a = bt.alpha, b = bs.alpha;
    return (1 - a) * (1 - b) * g00 + a * (1 - b) * g10 + (1 - a) * b * g01 + a * b * g11;
}

Eigen::MatrixXd CovarianceModel::interpolated_slice(double z) const {
    if (kind != CovarianceKind::covariate_adjusted)
        throw IntegrityError("interpolated_slice: pooled model has no z-slices");
    GridBracket bz = bracket(z_grid, z);
    Eigen::MatrixXd g = gamma[bz.index];
    if (bz.alpha != 0.0) g += bz.alpha * (gamma[bz.index + 1] - gamma[bz.index]);
    symmetrize(g);
    return g;
}

CovarianceModel estimate_gamma_pooled(const RawCovariances& raw, double bandwidth,
                                      SmootherKind smoother, std::vector<double> t_grid) {
    if (raw.off_diagonal.empty())
        throw EstimationError("estimate_gamma_pooled: no off-diagonal raw covariances");
    Bandwidths bw(bandwidth, bandwidth);
    bw.validate(2);

    CovarianceModel model;
    model.kind = CovarianceKind::pooled;
    model.smoother = smoother;
    model.bandwidths = Bandwidths(bandwidth);
    model.t_grid = std::move(t_grid);

    const std::vector<WeightedSample> samples = off_diag_samples(raw, CovarianceKind::pooled);
    KernelSpec spec;
    spec.dimension = 2;
    const int degree = degree_of(smoother);
    const std::size_t nt = model.t_grid.size();

    Eigen::MatrixXd g(nt, nt);
    parallel_for(nt * nt, [&](std::size_t idx) {
        std::size_t i = idx / nt, j = idx % nt;
        Point target{model.t_grid[i], model.t_grid[j], 0.0};
        try {
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                local_poly_fit(samples, target, bw, degree, spec).value;
        } catch (const Error& e) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "covariance estimation failed at (t=%g, s=%g): ",
                          model.t_grid[i], model.t_grid[j]);
            throw EstimationError(std::string(buf) + e.what());
        }
    });
    symmetrize(g);
    model.gamma.push_back(std::move(g));
    return model;
}

CovarianceModel estimate_gamma_adjusted(const RawCovariances& raw, const Bandwidths& bw,
                                        SmootherKind smoother, std::vector<double> t_grid,
                                        std::vector<double> z_grid) {
    if (raw.off_diagonal.empty())
        throw EstimationError("estimate_gamma_adjusted: no off-diagonal raw covariances");
    bw.validate(2);  // (h_t, h_z); h_t shared by both time axes
    Bandwidths bw3(bw[0], bw[0], bw[1]);

    CovarianceModel model;
    model.kind = CovarianceKind::covariate_adjusted;
    model.smoother = smoother;
    model.bandwidths = bw;
    model.t_grid = std::move(t_grid);
    model.z_grid = std::move(z_grid);

    const std::vector<WeightedSample> samples =
        off_diag_samples(raw, CovarianceKind::covariate_adjusted);
    KernelSpec spec;
    spec.dimension = 3;
    const int degree = degree_of(smoother);
    const std::size_t nt = model.t_grid.size();
    const std::size_t nz = model.z_grid.size();

    model.gamma.assign(nz, Eigen::MatrixXd(nt, nt));
    parallel_for(nt * nt * nz, [&](std::size_t idx) {
        std::size_t m = idx / (nt * nt);
        std::size_t rem = idx % (nt * nt);
        std::size_t i = rem / nt, j = rem % nt;
        Point target{model.t_grid[i], model.t_grid[j], model.z_grid[m]};
        try {
            model.gamma[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                local_poly_fit(samples, target, bw3, degree, spec).value;
        } catch (const Error& e) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "covariance estimation failed at (t=%g, s=%g, z=%g): ",
                          model.t_grid[i], model.t_grid[j], model.z_grid[m]);
            throw EstimationError(std::string(buf) + e.what());
        }
    });
    for (auto& g : model.gamma) symmetrize(g);
    return model;
}

void estimate_variance_diag(const RawCovariances& raw, const Bandwidths& bw, SmootherKind smoother,
                            CovarianceModel& model) {
    if (raw.diagonal.empty()) throw EstimationError("estimate_variance_diag: no diagonal records");
    const int degree = degree_of(smoother);
    const std::size_t nt = model.t_grid.size();

    if (model.kind == CovarianceKind::pooled) {
        bw.validate(1);
        std::vector<WeightedSample> samples;
        samples.reserve(raw.diagonal.size());
        for (const RawDiagRecord& r : raw.diagonal)
            samples.push_back(WeightedSample{{r.t, 0.0, 0.0}, r.value, 1.0});
        KernelSpec spec;
        spec.dimension = 1;
        model.variance_diag.resize(nt, 1);
        parallel_for(nt, [&](std::size_t i) {
            model.variance_diag(static_cast<Eigen::Index>(i), 0) =
                local_poly_fit(samples, Point{model.t_grid[i], 0.0, 0.0}, bw, degree, spec).value;
        });
        return;
    }

    bw.validate(2);
    std::vector<WeightedSample> samples;
    samples.reserve(raw.diagonal.size());
    for (const RawDiagRecord& r : raw.diagonal)
        samples.push_back(WeightedSample{{r.t, r.z, 0.0}, r.value, 1.0});
    KernelSpec spec;
    spec.dimension = 2;
    const std::size_t nz = model.z_grid.size();
    model.variance_diag.resize(nt, static_cast<Eigen::Index>(nz));
    parallel_for(nt * nz, [&](std::size_t idx) {
        std::size_t i = idx / nz, j = idx % nz;
        model.variance_diag(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            local_poly_fit(samples, Point{model.t_grid[i], model.z_grid[j], 0.0}, bw, degree, spec)
                .value;
    });
}

double estimate_sigma2(CovarianceModel& model, const Interval& time_domain) {
    if (model.variance_diag.size() == 0)
        throw IntegrityError("estimate_sigma2: variance diagonal not estimated");
    const double quarter = time_domain.length() / 4.0;
    const double lo = time_domain.lo + quarter, hi = time_domain.hi - quarter;

    std::vector<double> sub_t;
    std::vector<std::size_t> sub_idx;
    for (std::size_t i = 0; i < model.t_grid.size(); ++i) {
        double t = model.t_grid[i];
        if (t >= lo - 1e-12 && t <= hi + 1e-12) {
            sub_t.push_back(t);
            sub_idx.push_back(i);
        }
    }
    if (sub_t.size() < 2) throw NumericError("estimate_sigma2: too few grid nodes in the trim range");
    const double t_span = sub_t.back() - sub_t.front();

    double value = 0.0;
    if (model.kind == CovarianceKind::pooled) {
        std::vector<double> diff(sub_t.size());
        for (std::size_t a = 0; a < sub_idx.size(); ++a) {
            auto i = static_cast<Eigen::Index>(sub_idx[a]);
            diff[a] = model.variance_diag(i, 0) - model.gamma[0](i, i);
        }
        value = trapezoid_integral(sub_t, diff) / t_span;
    } else {
        // average over the trimmed time range and the full covariate domain
        std::vector<double> per_z(model.z_grid.size());
        for (std::size_t m = 0; m < model.z_grid.size(); ++m) {
            std::vector<double> diff(sub_t.size());
            for (std::size_t a = 0; a < sub_idx.size(); ++a) {
                auto i = static_cast<Eigen::Index>(sub_idx[a]);
                diff[a] = model.variance_diag(i, static_cast<Eigen::Index>(m)) -
                          model.gamma[m](i, i);
            }
            per_z[m] = trapezoid_integral(sub_t, diff) / t_span;
        }
        double z_span = model.z_grid.back() - model.z_grid.front();
        value = trapezoid_integral(model.z_grid, per_z) / z_span;
    }
    model.sigma2 = std::max(0.0, value);
    return model.sigma2;
}

CovCvResult kfold_scores(const LongitudinalDataset& data, const MeanSurface& mean,
                         std::span<const Bandwidths> candidates, std::size_t k,
                         CovarianceKind kind, SmootherKind smoother, std::uint64_t seed) {
    if (candidates.empty()) throw SelectionError("kfold_bandwidth: no candidates");
    if (k < 2) throw SelectionError("kfold_bandwidth: need k >= 2");
    if (data.size() < k) throw SelectionError("kfold_bandwidth: fewer subjects than folds");

    const int expect_dim = kind == CovarianceKind::pooled ? 1 : 2;
    for (const Bandwidths& c : candidates) c.validate(expect_dim);

    const RawCovariances raw = raw_covariances(data, mean);
    if (raw.off_diagonal.empty())
        throw SelectionError("kfold_bandwidth: no off-diagonal raw covariances");

    CovCvResult result;
    result.candidates.assign(candidates.begin(), candidates.end());
    result.scores.assign(candidates.size(), 0.0);
    std::vector<char> infeasible(candidates.size(), 0);

    // seeded shuffle, then deal subjects round-robin into the k folds
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng(seed).stream(0x6f1d5u).shuffle(order);
    result.fold_of_subject.resize(data.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        result.fold_of_subject[order[pos]] = pos % k;

    const int smoother_dim = kind == CovarianceKind::pooled ? 2 : 3;
    KernelSpec spec;
    spec.dimension = smoother_dim;
    const int degree = degree_of(smoother);
    const std::vector<WeightedSample> all_samples = off_diag_samples(raw, kind);

    for (std::size_t fold = 0; fold < k; ++fold) {
        // zero base weight removes a sample from every fit
        std::vector<WeightedSample> train = all_samples;
        std::vector<std::size_t> held;
        for (std::size_t r = 0; r < raw.off_diagonal.size(); ++r) {
            if (result.fold_of_subject[raw.off_diagonal[r].subject] == fold) {
                train[r].w = 0.0;
                held.push_back(r);
            }
        }
        if (held.empty()) continue;

        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (infeasible[c]) continue;
            Bandwidths bw = kind == CovarianceKind::pooled
                                ? Bandwidths(candidates[c][0], candidates[c][0])
                                : Bandwidths(candidates[c][0], candidates[c][0], candidates[c][1]);
            std::vector<double> errs(held.size(), 0.0);
            try {
                parallel_for(held.size(), [&](std::size_t hi) {
                    const RawCovRecord& rec = raw.off_diagonal[held[hi]];
                    Point target{rec.t1, rec.t2,
                                 kind == CovarianceKind::covariate_adjusted ? rec.z : 0.0};
                    double pred = local_poly_fit(train, target, bw, degree, spec).value;
                    double d = rec.value - pred;
                    errs[hi] = d * d;
                });
            } catch (const SingularFitError&) {
                infeasible[c] = 1;
                continue;
            }
            for (double e : errs) result.scores[c] += e;
        }
    }

    for (std::size_t c = 0; c < candidates.size(); ++c)
        if (infeasible[c]) result.scores[c] = std::numeric_limits<double>::infinity();

    std::size_t best = candidates.size();
    auto size_of = [](const Bandwidths& b) {
        double p = 1.0;
        for (int i = 0; i < b.dimension(); ++i) p *= b[i];
        return p;
    };
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (std::isinf(result.scores[c])) continue;
        if (best == candidates.size() || result.scores[c] < result.scores[best] ||
            (result.scores[c] == result.scores[best] &&
             size_of(result.candidates[c]) > size_of(result.candidates[best])))
            best = c;
    }
    if (best == candidates.size()) throw SelectionError("kfold_bandwidth: every candidate failed");
    result.selected = result.candidates[best];
    return result;
}

Bandwidths kfold_bandwidth(const LongitudinalDataset& data, const MeanSurface& mean,
                           std::span<const Bandwidths> candidates, std::size_t k,
                           CovarianceKind kind, SmootherKind smoother, std::uint64_t seed) {
    return kfold_scores(data, mean, candidates, k, kind, smoother, seed).selected;
}

std::vector<Bandwidths> default_cov_candidates(const LongitudinalDataset& data, CovarianceKind kind,
                                               std::size_t per_dim) {
    auto log_spaced = [&](double len) {
        std::vector<double> v(per_dim);
        double lo = 0.05 * len, hi = 0.50 * len;
        for (std::size_t i = 0; i < per_dim; ++i) {
            double f = per_dim == 1 ? 0.0
                                    : static_cast<double>(i) / static_cast<double>(per_dim - 1);
            v[i] = lo * std::pow(hi / lo, f);
        }
        return v;
    };
    std::vector<double> ht = log_spaced(data.time_domain().length());
    std::vector<Bandwidths> out;
    if (kind == CovarianceKind::pooled) {
        for (double h : ht) out.emplace_back(h);
        return out;
    }
    std::vector<double> hz = log_spaced(data.covariate_domain().length());
    for (double a : ht)
        for (double b : hz) out.emplace_back(a, b);
    return out;
}

}  // namespace cafpca
