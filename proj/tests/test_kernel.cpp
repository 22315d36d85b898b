#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cafpca/kernel.hpp"
#include "cafpca/rng.hpp"
#include "oracles.hpp"

using namespace cafpca;

namespace {

std::vector<WeightedSample> affine_samples(Rng& rng, int dim, std::size_t n, double b0, double b1,
                                           double b2, double b3) {
    std::vector<WeightedSample> s(n);
    for (auto& smp : s) {
        for (int d = 0; d < dim; ++d) smp.x[static_cast<std::size_t>(d)] = rng.uniform01();
        smp.y = b0 + b1 * smp.x[0] + b2 * smp.x[1] + b3 * smp.x[2];
    }
    return s;
}

KernelSpec spec_d(int d) {
    KernelSpec spec;
    spec.dimension = d;
    return spec;
}

}  // namespace

TEST_CASE("epanechnikov product kernel values") {
    CHECK(kernel_eval(spec_d(1), {0.0, 0.0, 0.0}) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(kernel_eval(spec_d(2), {1.5, 0.0, 0.0}) == 0.0);
    CHECK(kernel_eval(spec_d(2), {0.0, 1.0, 0.0}) == 0.0);
    CHECK(kernel_eval(spec_d(3), {0.2, -0.3, 0.4}) ==
          doctest::Approx(epanechnikov(0.2) * epanechnikov(-0.3) * epanechnikov(0.4))
              .epsilon(1e-15));
}

TEST_CASE("kernel mass and moment conditions by quadrature") {
    double mass1 = oracles::simpson([](double u) { return epanechnikov(u); }, -1.0, 1.0);
    CHECK(std::abs(mass1 - 1.0) <= 1e-8);

    double first = oracles::simpson([](double u) { return u * epanechnikov(u); }, -1.0, 1.0);
    CHECK(std::abs(first) <= 1e-8);

    double mass3 = oracles::simpson3([](double u, double v, double w) {
        return kernel_eval(KernelSpec{3}, {u, v, w});
    });
    CHECK(std::abs(mass3 - 1.0) <= 1e-8);

    // product-kernel marginal second moment: 3D quadrature equals 1D quadrature
    double m2_3d = oracles::simpson3([](double u, double v, double w) {
        return u * u * kernel_eval(KernelSpec{3}, {u, v, w});
    });
    double m2_1d = oracles::simpson([](double u) { return u * u * epanechnikov(u); }, -1.0, 1.0);
    CHECK(std::abs(m2_3d - m2_1d) <= 1e-8);
    CHECK(m2_1d == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("local linear reproduces affine data to 1e-10") {
    Rng rng(42);
    for (int dim = 1; dim <= 3; ++dim) {
        auto samples = affine_samples(rng, dim, 400, 1.0, 2.0, -3.0, 0.5);
        Bandwidths bw = dim == 1   ? Bandwidths(0.2)
                        : dim == 2 ? Bandwidths(0.2, 0.3)
                                   : Bandwidths(0.3, 0.3, 0.4);
        for (int rep = 0; rep < 25; ++rep) {
            Point target{0, 0, 0};
            for (int d = 0; d < dim; ++d) target[static_cast<std::size_t>(d)] = rng.uniform01();
            double expect = 1.0 + 2.0 * target[0] + (dim >= 2 ? -3.0 * target[1] : 0.0) +
                            (dim >= 3 ? 0.5 * target[2] : 0.0);
            LocalFit fit = local_poly_fit(samples, target, bw, 1, spec_d(dim));
            CHECK(std::abs(fit.value - expect) <= 1e-10);
        }
    }
}

TEST_CASE("y = 2t + 1 with two distinct points is recovered exactly") {
    std::vector<WeightedSample> s{{{0.3, 0, 0}, 1.6, 1.0}, {{0.7, 0, 0}, 2.4, 1.0}};
    LocalFit fit = local_poly_fit(s, {0.5, 0, 0}, Bandwidths(0.5), 1, spec_d(1));
    CHECK(std::abs(fit.value - 2.0) <= 1e-10);
    CHECK(std::abs(fit.slope[0] - 2.0) <= 1e-8);
}

TEST_CASE("degree 0 is the kernel-weighted mean") {
    Rng rng(7);
    auto samples = affine_samples(rng, 1, 50, 5.0, 0.0, 0.0, 0.0);
    LocalFit fit = local_poly_fit(samples, {0.4, 0, 0}, Bandwidths(0.3), 0, spec_d(1));
    CHECK(std::abs(fit.value - 5.0) <= 1e-10);

    // direct weighted-mean recomputation on noisy data
    for (auto& s : samples) s.y = rng.uniform(-1.0, 1.0);
    for (auto& s : samples) s.w = rng.uniform(0.0, 2.0);
    Point target{0.6, 0, 0};
    double num = 0.0, den = 0.0;
    for (const auto& s : samples) {
        double w = s.w * epanechnikov((s.x[0] - target[0]) / 0.3);
        num += w * s.y;
        den += w;
    }
    LocalFit nw = local_poly_fit(samples, target, Bandwidths(0.3), 0, spec_d(1));
    CHECK(std::abs(nw.value - num / den) <= 1e-12);
}

TEST_CASE("random 2D fits match the dense weighted normal-equations oracle") {
    Rng rng(2024);
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<WeightedSample> samples(30);
        for (auto& s : samples) {
            s.x = {rng.uniform01(), rng.uniform01(), 0.0};
            s.y = rng.uniform(-2.0, 2.0);
            s.w = rng.uniform(0.1, 1.5);
        }
        Point target{rng.uniform01(), rng.uniform01(), 0.0};
        Bandwidths bw(rng.uniform(0.4, 0.9), rng.uniform(0.4, 0.9));
        LocalFit fit = local_poly_fit(samples, target, bw, 1, spec_d(2));
        Eigen::VectorXd beta = oracles::dense_wls(samples, target, bw, 1, 2);
        CHECK(std::abs(fit.value - beta(0)) <= 1e-10);
        CHECK(std::abs(fit.slope[0] - beta(1)) <= 1e-8);
        CHECK(std::abs(fit.slope[1] - beta(2)) <= 1e-8);
    }
}

TEST_CASE("zero-weight samples never influence the fit") {
    Rng rng(5);
    std::vector<WeightedSample> samples(60);
    for (auto& s : samples) {
        s.x = {rng.uniform01(), 0, 0};
        s.y = rng.uniform(-1.0, 1.0);
    }
    Point target{0.5, 0, 0};
    Bandwidths bw(0.15);
    LocalFit base = local_poly_fit(samples, target, bw, 1, spec_d(1));

    // perturb everything outside the kernel window and everything zero-weighted
    auto perturbed = samples;
    for (auto& s : perturbed)
        if (std::abs(s.x[0] - target[0]) >= bw[0]) s.y += 1e6;
    perturbed.push_back({{0.5, 0, 0}, 1e9, 0.0});
    LocalFit same = local_poly_fit(perturbed, target, bw, 1, spec_d(1));
    CHECK(same.value == base.value);
    CHECK(same.slope[0] == base.slope[0]);
}

TEST_CASE("scaling responses scales the fitted value") {
    Rng rng(9);
    std::vector<WeightedSample> samples(50);
    for (auto& s : samples) {
        s.x = {rng.uniform01(), rng.uniform01(), 0};
        s.y = rng.uniform(-1.0, 1.0);
    }
    Point target{0.5, 0.5, 0};
    Bandwidths bw(0.4, 0.4);
    double base = local_poly_fit(samples, target, bw, 1, spec_d(2)).value;
    for (auto& s : samples) s.y *= -3.5;
    double scaled = local_poly_fit(samples, target, bw, 1, spec_d(2)).value;
    CHECK(scaled == doctest::Approx(-3.5 * base).epsilon(1e-12));
}

TEST_CASE("window underflow widens the bandwidth, then signals singular-fit") {
    std::vector<WeightedSample> samples{
        {{0.00, 0, 0}, 1.0, 1.0}, {{0.02, 0, 0}, 1.1, 1.0}, {{0.05, 0, 0}, 1.2, 1.0}};
    // empty window at t = 0.3 with h = 0.05; 1.5^4 * 0.05 covers the samples
    LocalFit fit = local_poly_fit(samples, {0.3, 0, 0}, Bandwidths(0.05), 1, spec_d(1));
    CHECK(fit.widening > 1.0);
    // far beyond any widened window
    CHECK_THROWS_AS(
        (void)local_poly_fit(samples, {2.5, 0, 0}, Bandwidths(0.05), 1, spec_d(1)),
        SingularFitError);
}

TEST_CASE("fit_surface equals looped single fits bitwise") {
    Rng rng(11);
    std::vector<WeightedSample> samples(120);
    for (auto& s : samples) {
        s.x = {rng.uniform01(), rng.uniform01(), 0};
        s.y = rng.uniform(-1.0, 1.0);
    }
    std::vector<Point> targets(37);
    for (auto& t : targets) t = {rng.uniform01(), rng.uniform01(), 0};
    Bandwidths bw(0.25, 0.3);

    std::vector<double> batch = fit_surface(samples, targets, bw, 1, spec_d(2));
    REQUIRE(batch.size() == targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double single = local_poly_fit(samples, targets[i], bw, 1, spec_d(2)).value;
        CHECK(batch[i] == single);
    }
}

TEST_CASE("fit_surface reports the failing target index") {
    std::vector<WeightedSample> samples{{{0.0, 0, 0}, 1.0, 1.0}, {{0.01, 0, 0}, 1.0, 1.0}};
    std::vector<Point> targets{{0.0, 0, 0}, {5.0, 0, 0}};
    try {
        (void)fit_surface(samples, targets, Bandwidths(0.05), 1, spec_d(1));
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(std::string(e.what()).find("target 1") != std::string::npos);
    }
}

TEST_CASE("bandwidth and spec validation") {
    std::vector<WeightedSample> samples{{{0.1, 0, 0}, 1.0, 1.0}, {{0.2, 0, 0}, 1.0, 1.0}};
    CHECK_THROWS_AS((void)local_poly_fit(samples, {0.1, 0, 0}, Bandwidths(-0.1), 1, spec_d(1)),
                    DomainError);
    CHECK_THROWS_AS((void)local_poly_fit(samples, {0.1, 0, 0}, Bandwidths(0.1, 0.1), 1, spec_d(1)),
                    DomainError);
    CHECK_THROWS_AS((void)local_poly_fit(samples, {0.1, 0, 0}, Bandwidths(0.1), 2, spec_d(1)),
                    DomainError);
    KernelSpec bad;
    bad.dimension = 4;
    CHECK_THROWS_AS((void)kernel_eval(bad, {0, 0, 0}), DomainError);
}
