#pragma once

#include "latticescale/coeff_families.hpp"
#include "latticescale/grid.hpp"
#include "latticescale/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace lsc::sim {

using lsc::rng::InnovationFamily;
using lsc::rng::InnovationSpec;

// Metadata identifying the coefficient grid a slab was built from.
struct CoeffMeta {
    coeff::Family family = coeff::Family::synthetic;
    int R1 = 0, R2 = 0;
    double q1 = 0.0, q2 = 0.0;
    std::vector<double> params;
};

// A realization of the field X(t,s) on the window [1,T1] x [1,T2];
// values(t-1, s-1) = X(t,s).
struct FieldSlab {
    Array2D<double> values;
    int T1 = 0, T2 = 0;
    InnovationSpec innov;
    std::uint64_t replicate = 0;
    CoeffMeta coeff_meta;
};

struct SimOptions {
    // Reject simulations whose working arrays would exceed this budget.
    std::size_t memory_budget_bytes = std::size_t{2} * 1024 * 1024 * 1024;
    // Force the direct (quadruple-loop) convolution path.
    bool force_direct = false;
};

// Simulate X(t,s) = sum_{p,q} a(p,q) eps(t-p, s-q) on [1,T1] x [1,T2].
// The innovation slab extends the window by the full coefficient support, so
// every field value uses the complete truncated kernel.  Fast path is FFT
// convolution; force_direct selects the reference path (identical values up
// to rounding, rms <= 1e-9).
FieldSlab simulate_field(const coeff::CoefficientGrid& coeffs, int T1, int T2,
                         const InnovationSpec& innov, std::uint64_t replicate,
                         const SimOptions& opt = {});

struct PartialSumEntry {
    double lambda = 0.0;
    double gamma = 0.0;
    double x = 0.0, y = 0.0;
    long long n = 0, m = 0; // effective rectangle: n = floor(lambda x), m = floor(lambda^gamma y)
    double value = 0.0;     // S_{lambda,gamma}(x,y)
};

struct PartialSumTable {
    // prefix(i, j) = sum of slab values over [1,i] x [1,j]; row/col 0 are 0.
    Array2D<double> prefix;
    std::vector<PartialSumEntry> entries;

    // O(1) rectangle sum over [1,n] x [1,m] (n, m already floored).
    double rectangle(long long n, long long m) const;
};

// Rectangle partial sums S_{lambda,gamma}(x,y) = sum over
// {1 <= t <= floor(lambda x), 1 <= s <= floor(lambda^gamma y)}.
// Errors if any requested rectangle exceeds the slab or is empty.
PartialSumTable partial_sums(const FieldSlab& slab, const std::vector<double>& lambdas,
                             double gamma, const std::vector<std::pair<double, double>>& points);

struct VarianceEstimate {
    double lambda = 0.0;
    double variance = 0.0; // unbiased sample variance across replicates
    double stderr_ = 0.0;  // standard error of the variance estimate
    int reps = 0;
};

// Monte Carlo variance of S_{lambda,gamma}(x,y) across independent
// replicates (each replicate is one field simulation; all lambdas share it
// through the prefix table).  Deterministic for fixed (seed, config),
// independent of thread count.
std::vector<VarianceEstimate> replicate_variance(
    const coeff::CoefficientGrid& coeffs, const InnovationSpec& innov, double gamma,
    const std::vector<double>& lambdas, std::pair<double, double> point, int reps,
    unsigned threads = 1, const SimOptions& opt = {});

// Exact variance Var S = sum_{(u,v)} G(u,v)^2 where G(u,v) is the rectangle
// sum of shifted coefficients; computed with prefix sums over the
// coefficient grid, no Monte Carlo error.
double exact_variance(const coeff::CoefficientGrid& coeffs, double gamma,
                      double lambda, std::pair<double, double> point);

// The weight G_{lambda,gamma}(u,v) itself (for diagnostics/identities).
double g_weight(const coeff::CoefficientGrid& coeffs, long long n, long long m,
                long long u, long long v);

} // namespace lsc::sim
