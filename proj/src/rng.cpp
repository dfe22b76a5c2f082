#include "latticescale/rng.hpp"

#include <cmath>
#include <numbers>

namespace lsc::rng {

namespace {

constexpr std::uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t PHILOX_M1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t PHILOX_W1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
    __uint128_t p = static_cast<__uint128_t>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline Counter round_once(const Counter& c, std::uint64_t k0, std::uint64_t k1) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(PHILOX_M0, c[0], hi0, lo0);
    mulhilo(PHILOX_M1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

// Map a 64-bit word to a uniform double on (0, 1]: 53 high bits, shifted off
// zero so that log() below is always finite.
inline double u64_to_unit_open_zero(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 1.0) * 0x1p-53;
}

// Map a 64-bit word to a uniform double on [0, 1).
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1p-53;
}

} // namespace

Counter philox4x64_10(Counter counter, std::uint64_t key0, std::uint64_t key1) {
    for (int r = 0; r < 10; ++r) {
        counter = round_once(counter, key0, key1);
        key0 += PHILOX_W0;
        key1 += PHILOX_W1;
    }
    return counter;
}

InnovationFamily innovation_family_from_string(const std::string& name) {
    if (name == "gaussian") return InnovationFamily::gaussian;
    if (name == "rademacher") return InnovationFamily::rademacher;
    if (name == "centered_uniform") return InnovationFamily::centered_uniform;
    throw std::invalid_argument("unknown innovation family: " + name);
}

std::string to_string(InnovationFamily f) {
    switch (f) {
        case InnovationFamily::gaussian: return "gaussian";
        case InnovationFamily::rademacher: return "rademacher";
        case InnovationFamily::centered_uniform: return "centered_uniform";
    }
    throw std::invalid_argument("bad innovation family value");
}

double innovation(const InnovationSpec& spec, std::int64_t u, std::int64_t v,
                  std::uint64_t replicate) {
    Counter ctr = {static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v),
                   replicate, 0};
    Counter out = philox4x64_10(ctr, spec.base_seed, innovation_key_tag);
    switch (spec.family) {
        case InnovationFamily::gaussian: {
            double u1 = u64_to_unit_open_zero(out[0]);
            double u2 = u64_to_unit(out[1]);
            return std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
        }
        case InnovationFamily::rademacher:
            return (out[0] >> 63) ? 1.0 : -1.0;
        case InnovationFamily::centered_uniform: {
            // Symmetric lattice offset keeps the mean exactly zero.
            double c = (static_cast<double>(out[0] >> 11) + 0.5) * 0x1p-53;
            return (c - 0.5) * std::sqrt(12.0);
        }
    }
    throw std::invalid_argument("bad innovation family value");
}

} // namespace lsc::rng
