#ifndef CAFPCA_RNG_HPP
#define CAFPCA_RNG_HPP

#include <cstdint>
#include <cmath>
#include <vector>

namespace cafpca {

// Splittable pseudo-random generator built on the splitmix64 finalizer.
//
// Streams are derived, not shared: stream(a, b) mixes the labels into the
// current seed and returns an independent generator, so e.g. the simulation
// uses  root.stream(run).stream(subject, purpose)  and every (run, subject,
// purpose) triple gets a reproducible sequence that does not depend on how
// many draws any other stream consumed. Results are identical across
// platforms and thread schedules.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kInit)) {}

    // Derived substream; deterministic function of (current seed, a, b).
    Rng stream(std::uint64_t a, std::uint64_t b = 0) const {
        Rng child(0);
        child.state_ = mix(state_ ^ mix(a ^ kStreamA) ^ mix(b ^ kStreamB));
        return child;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // N(mean, sd^2) via Box-Muller (cosine branch; one normal per call).
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
        return mean + sd * z;
    }

    // Uniform integer in [lo, hi] inclusive, unbiased (rejection sampling).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr std::uint64_t kInit = 0x5ca1ab1e0ddba11ULL;
    static constexpr std::uint64_t kStreamA = 0x9e3779b97f4a7c15ULL;
    static constexpr std::uint64_t kStreamB = 0xbf58476d1ce4e5b9ULL;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
};

}  // namespace cafpca

#endif  // CAFPCA_RNG_HPP
