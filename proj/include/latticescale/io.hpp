#pragma once

#include "latticescale/coeff_families.hpp"
#include "latticescale/lattice_sim.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lsc::io {

// Binary containers are little-endian and self-describing:
//   grid: magic "LSCG", version u16, R1 u32, R2 u32, q1 f64, q2 f64,
//         family u8, param count u32 + params f64[], values f64[] row-major.
//   slab: magic "LSSB", version u16, T1 u32, T2 u32, base_seed u64,
//         replicate u64, innovation family u8, coeff meta (family u8,
//         R1 u32, R2 u32, q1 f64, q2 f64, param count u32 + params f64[]),
//         values f64[] row-major.
// Each write also produces a JSON sidecar at path + ".json" with the same
// metadata (not the bulk values) for inspection.

inline constexpr std::uint16_t container_version = 1;

void write_grid(const std::string& path, const coeff::CoefficientGrid& grid);
coeff::CoefficientGrid read_grid(const std::string& path);

void write_slab(const std::string& path, const sim::FieldSlab& slab);
sim::FieldSlab read_slab(const std::string& path);

// Shortest-exact decimal formatting used in all text outputs (%.17g keeps
// doubles bit-exact through a parse round trip).
std::string format_double(double v);

// FNV-1a 64-bit hash (used for config hashes embedded in reports).
std::uint64_t fnv1a64(std::string_view bytes);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal CSV writer: caller supplies header + rows of preformatted cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace lsc::io
