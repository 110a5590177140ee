#pragma once

#include <concepts>
#include <cstdint>

namespace qtrack {

// SplitMix64 finalizer (Stafford variant 13). A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-run seed. Stateless, so runs can be scheduled in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_index) {
    return mix64(master ^ run_index);
}

// Uniform in the open interval (0, 1): the counter-th output of a SplitMix64
// sequence seeded with `seed`, computed without walking the sequence.
inline double uniform_at(std::uint64_t seed, std::uint64_t counter) {
    constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    const std::uint64_t bits = mix64(seed + (counter + 1) * kGamma);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal quantile, Wichura's AS241 (PPND16), ~1e-16 relative.
double inverse_normal_cdf(double p);

// Counter-based standard normal stream. The k-th draw depends only on
// (seed, k), which makes tracks reproducible independent of thread layout.
class CounterNormalStream {
public:
    explicit CounterNormalStream(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    double next() { return inverse_normal_cdf(uniform_at(seed_, counter_++)); }
    double at(std::uint64_t k) const { return inverse_normal_cdf(uniform_at(seed_, k)); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

// Anything with `double next()` returning standard normal draws.
template <class G>
concept NormalSource = requires(G g) {
    { g.next() } -> std::convertible_to<double>;
};

}  // namespace qtrack
