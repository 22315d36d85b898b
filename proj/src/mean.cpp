#include "cafpca/mean.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "cafpca/errors.hpp"
#include "cafpca/parallel.hpp"

namespace cafpca {

namespace {

int degree_of(SmootherKind k) { return k == SmootherKind::local_linear ? 1 : 0; }

KernelSpec spec_for(MeanMode mode) {
    KernelSpec spec;
    spec.dimension = mode == MeanMode::covariate_adjusted ? 2 : 1;
    return spec;
}

// pooled (T_ij[, Z_i], Y_ij) samples, subject-contiguous in subject order
std::vector<WeightedSample> pool_samples(const LongitudinalDataset& data, MeanMode mode) {
    std::vector<WeightedSample> samples;
    samples.reserve(data.total_observations());
    for (const Subject& s : data.subjects()) {
        double z = mode == MeanMode::covariate_adjusted ? s.covariate : 0.0;
        for (const Observation& o : s.observations)
            samples.push_back(WeightedSample{{o.time, z, 0.0}, o.value, 1.0});
    }
    return samples;
}

Point target_for(MeanMode mode, double t, double z) {
    return mode == MeanMode::covariate_adjusted ? Point{t, z, 0.0} : Point{t, 0.0, 0.0};
}

[[noreturn]] void rethrow_at(const Error& e, double t, double z, MeanMode mode) {
    char buf[160];
    if (mode == MeanMode::covariate_adjusted)
        std::snprintf(buf, sizeof buf, "mean estimation failed at (t=%g, z=%g): ", t, z);
    else
        std::snprintf(buf, sizeof buf, "mean estimation failed at (t=%g): ", t);
    throw EstimationError(std::string(buf) + e.what());
}

}  // namespace

double MeanSurface::evaluate(double t, double z) const {
    return local_poly_fit(*samples_, target_for(mode_, t, z), bandwidths_, degree_of(smoother_),
                          spec_)
        .value;
}

MeanSurface estimate_mean(const LongitudinalDataset& data, const Bandwidths& bw,
                          SmootherKind smoother, MeanMode mode, const MeanGridSpec& grid) {
    KernelSpec spec = spec_for(mode);
    bw.validate(spec.dimension);

    MeanSurface out;
    out.mode_ = mode;
    out.smoother_ = smoother;
    out.bandwidths_ = bw;
    out.spec_ = spec;
    out.samples_ = std::make_shared<const std::vector<WeightedSample>>(pool_samples(data, mode));

    const int degree = degree_of(smoother);
    const auto& samples = *out.samples_;

    out.fitted_at_obs_.resize(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const Subject& s = data.subject(i);
        std::vector<double>& fits = out.fitted_at_obs_[i];
        fits.resize(s.observations.size());
        for (std::size_t j = 0; j < s.observations.size(); ++j) {
            double t = s.observations[j].time;
            try {
                fits[j] = local_poly_fit(samples, target_for(mode, t, s.covariate), bw, degree, spec)
                              .value;
            } catch (const Error& e) {
                rethrow_at(e, t, s.covariate, mode);
            }
        }
    });

    out.t_grid_ = linspace(data.time_domain().lo, data.time_domain().hi, grid.t_points);
    if (mode == MeanMode::covariate_adjusted)
        out.z_grid_ = linspace(data.covariate_domain().lo, data.covariate_domain().hi, grid.z_points);
    const std::size_t nz = out.z_grid_.empty() ? 1 : out.z_grid_.size();
    out.grid_values_.resize(out.t_grid_.size() * nz);
    parallel_for(out.t_grid_.size() * nz, [&](std::size_t idx) {
        std::size_t i = idx / nz, j = idx % nz;
        double t = out.t_grid_[i];
        double z = out.z_grid_.empty() ? 0.0 : out.z_grid_[j];
        try {
            out.grid_values_[idx] =
                local_poly_fit(samples, target_for(mode, t, z), bw, degree, spec).value;
        } catch (const Error& e) {
            rethrow_at(e, t, z, mode);
        }
    });
    return out;
}

MeanCvResult locv_scores(const LongitudinalDataset& data, std::span<const Bandwidths> candidates,
                         SmootherKind smoother, MeanMode mode) {
    if (candidates.empty()) throw SelectionError("locv_bandwidth: no candidates");
    if (data.size() < 2) throw SelectionError("locv_bandwidth: need at least 2 subjects");

    KernelSpec spec = spec_for(mode);
    const int degree = degree_of(smoother);
    const std::vector<WeightedSample> pooled = pool_samples(data, mode);

    // subject i occupies a contiguous sample range; zero base weights stand in
    // for removal (zero-weight samples never enter a fit)
    std::vector<std::size_t> offsets(data.size() + 1, 0);
    for (std::size_t i = 0; i < data.size(); ++i)
        offsets[i + 1] = offsets[i] + data.subject(i).observations.size();

    MeanCvResult result;
    result.candidates.assign(candidates.begin(), candidates.end());
    result.scores.assign(candidates.size(), std::numeric_limits<double>::infinity());

    for (std::size_t c = 0; c < candidates.size(); ++c) {
        candidates[c].validate(spec.dimension);
        std::vector<double> subject_sums(data.size(), 0.0);
        bool failed = false;
        try {
            parallel_for(data.size(), [&](std::size_t i) {
                std::vector<WeightedSample> held_out = pooled;
                for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) held_out[k].w = 0.0;
                const Subject& s = data.subject(i);
                double acc = 0.0;
                for (std::size_t j = 0; j < s.observations.size(); ++j) {
                    const Observation& o = s.observations[j];
                    double fit = local_poly_fit(held_out, target_for(mode, o.time, s.covariate),
                                                candidates[c], degree, spec)
                                     .value;
                    double r = o.value - fit;
                    acc += r * r;
                }
                subject_sums[i] = acc;
            });
        } catch (const SingularFitError&) {
            failed = true;
        }
        if (failed) continue;
        double score = 0.0;
        for (double v : subject_sums) score += v;
        result.scores[c] = score;
    }

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
             size_of(candidates[c]) > size_of(candidates[best])))
            best = c;
    }
    if (best == candidates.size())
        throw SelectionError("locv_bandwidth: every candidate failed");
    result.selected = candidates[best];
    return result;
}

Bandwidths locv_bandwidth(const LongitudinalDataset& data, std::span<const Bandwidths> candidates,
                          SmootherKind smoother, MeanMode mode) {
    return locv_scores(data, candidates, smoother, mode).selected;
}

std::vector<Bandwidths> default_mean_candidates(const LongitudinalDataset& data, MeanMode mode,
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
    if (mode == MeanMode::unadjusted) {
        for (double h : ht) out.emplace_back(h);
        return out;
    }
    std::vector<double> hz = log_spaced(data.covariate_domain().length());
    for (double a : ht)
        for (double b : hz) out.emplace_back(a, b);
    return out;
}

}  // namespace cafpca
