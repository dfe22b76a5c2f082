#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lsc::rng {

// Philox 4x64, 10 rounds: a counter-based generator.  Every innovation is a
// pure function of (key, counter), so draws are reproducible regardless of
// evaluation order, thread count, or which sub-window of the lattice is
// being filled.
using Counter = std::array<std::uint64_t, 4>;

Counter philox4x64_10(Counter counter, std::uint64_t key0, std::uint64_t key1);

enum class InnovationFamily : std::uint8_t {
    gaussian = 0,
    rademacher = 1,
    centered_uniform = 2,
};

InnovationFamily innovation_family_from_string(const std::string& name);
std::string to_string(InnovationFamily f);

struct InnovationSpec {
    InnovationFamily family = InnovationFamily::gaussian;
    std::uint64_t base_seed = 0;
};

// Domain-separation constant mixed into the Philox key alongside the user
// seed, so that the innovation stream is distinct from any other use of the
// same seed.
inline constexpr std::uint64_t innovation_key_tag = 0x6C61747469636531ULL;

// The innovation at lattice site (u, v) for the given replicate.  Mean 0,
// variance 1 for every family.  Integer coordinates are mapped to counter
// words by two's complement.
double innovation(const InnovationSpec& spec, std::int64_t u, std::int64_t v,
                  std::uint64_t replicate);

} // namespace lsc::rng
