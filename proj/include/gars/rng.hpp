#ifndef GARS_RNG_HPP_
#define GARS_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gars {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed and up to three stream ids.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x3c6ef372fe94f82bULL));
    s = splitmix64(s ^ (c + 0xa54ff53a5f1d36f1ULL));
    return s;
}

/// mt19937_64 with explicit sampling algorithms so results are identical across
/// platforms (std::normal_distribution and std::shuffle are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed), spare_valid_(false) {}

    std::uint64_t bits() { return gen_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller standard normal.
    double normal() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        spare_valid_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    /// Index drawn from unnormalized nonnegative weights (last bucket absorbs roundoff).
    int categorical(const double* w, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += w[i];
        double u = uniform() * total;
        for (int i = 0; i < n; ++i) {
            u -= w[i];
            if (u < 0.0) return i;
        }
        return n - 1;
    }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool spare_valid_;
};

}  // namespace gars

#endif  // GARS_RNG_HPP_
