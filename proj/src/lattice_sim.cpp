#include "latticescale/lattice_sim.hpp"

#include "latticescale/errors.hpp"
#include "latticescale/parallel.hpp"
#include "latticescale/summation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>

namespace lsc::sim {

namespace {

// FFTW plan creation/destruction is not thread-safe (execution is).
std::mutex fftw_plan_mutex;

struct PlanGuard {
    fftw_plan plan = nullptr;
    ~PlanGuard() {
        if (plan) {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex);
            fftw_destroy_plan(plan);
        }
    }
};

bool is_5smooth(int n) {
    for (int p : {2, 3, 5})
        while (n % p == 0) n /= p;
    return n == 1;
}

int next_fast_size(int n) {
    while (!is_5smooth(n)) ++n;
    return n;
}

CoeffMeta meta_of(const coeff::CoefficientGrid& g) {
    CoeffMeta m;
    m.family = g.family;
    m.R1 = g.R1;
    m.R2 = g.R2;
    m.q1 = g.q1;
    m.q2 = g.q2;
    m.params = g.params;
    return m;
}

long long floor_scale(double lambda, double exponent, double coord) {
    return static_cast<long long>(std::floor(std::pow(lambda, exponent) * coord));
}

// Prefix sums over the coefficient grid: cp(i,j) = sum of a over the first
// i rows and j columns of the stored (2R1+1) x (2R2+1) window.
class CoeffPrefix {
public:
    explicit CoeffPrefix(const coeff::CoefficientGrid& g)
        : R1_(g.R1), R2_(g.R2),
          cp_(static_cast<std::size_t>(2 * g.R1 + 2),
              static_cast<std::size_t>(2 * g.R2 + 2), 0.0) {
        for (std::size_t i = 1; i < cp_.rows(); ++i)
            for (std::size_t j = 1; j < cp_.cols(); ++j)
                cp_(i, j) = cp_(i - 1, j) + cp_(i, j - 1) - cp_(i - 1, j - 1) +
                            g.values(i - 1, j - 1);
    }

    // Sum of a over [pl, ph] x [ql, qh] in coefficient coordinates
    // (already clipped to the window by the caller).
    double box(long long pl, long long ph, long long ql, long long qh) const {
        if (pl > ph || ql > qh) return 0.0;
        auto i0 = static_cast<std::size_t>(pl + R1_), i1 = static_cast<std::size_t>(ph + R1_ + 1);
        auto j0 = static_cast<std::size_t>(ql + R2_), j1 = static_cast<std::size_t>(qh + R2_ + 1);
        return cp_(i1, j1) - cp_(i0, j1) - cp_(i1, j0) + cp_(i0, j0);
    }

    // G(u,v) for the n x m rectangle.
    double g(long long n, long long m, long long u, long long v) const {
        long long pl = std::max<long long>(-R1_, 1 - u), ph = std::min<long long>(R1_, n - u);
        long long ql = std::max<long long>(-R2_, 1 - v), qh = std::min<long long>(R2_, m - v);
        return box(pl, ph, ql, qh);
    }

private:
    long long R1_, R2_;
    Array2D<double> cp_;
};

void validate_rectangle(long long n, long long m, const char* who) {
    if (n < 1 || m < 1)
        throw std::invalid_argument(std::string(who) +
                                    ": empty rectangle (floor(lambda x) = " +
                                    std::to_string(n) + ", floor(lambda^gamma y) = " +
                                    std::to_string(m) + ")");
}

} // namespace

FieldSlab simulate_field(const coeff::CoefficientGrid& coeffs, int T1, int T2,
                         const InnovationSpec& innov, std::uint64_t replicate,
                         const SimOptions& opt) {
    if (T1 < 1 || T2 < 1)
        throw std::invalid_argument("simulate_field: window sizes must be >= 1");
    const int R1 = coeffs.R1, R2 = coeffs.R2;
    const long long E1 = T1 + 2LL * R1, E2 = T2 + 2LL * R2; // innovation slab
    const long long K1 = 2LL * R1 + 1, K2 = 2LL * R2 + 1;

    double direct_ops = static_cast<double>(T1) * T2 * static_cast<double>(K1) * K2;
    const int P1 = next_fast_size(static_cast<int>(E1 + K1 - 1));
    const int P2 = next_fast_size(static_cast<int>(E2 + K2 - 1));
    double fft_cells = static_cast<double>(P1) * P2;
    double fft_ops = 15.0 * fft_cells * (std::log2(fft_cells) + 1.0);
    bool use_fft = !opt.force_direct && fft_ops < direct_ops;

    double bytes = 8.0 * (static_cast<double>(E1) * E2 + static_cast<double>(T1) * T2);
    if (use_fft)
        bytes += 16.0 * fft_cells + 32.0 * P1 * (P2 / 2 + 1);
    if (bytes > static_cast<double>(opt.memory_budget_bytes))
        throw resource_error("simulate_field: working set of " +
                             std::to_string(static_cast<long long>(bytes)) +
                             " bytes exceeds the memory budget");

    Array2D<double> eps(static_cast<std::size_t>(E1), static_cast<std::size_t>(E2));
    for (long long i = 0; i < E1; ++i) {
        std::int64_t u = 1 - R1 + i;
        for (long long j = 0; j < E2; ++j) {
            std::int64_t v = 1 - R2 + j;
            eps(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                rng::innovation(innov, u, v, replicate);
        }
    }

    FieldSlab slab;
    slab.T1 = T1;
    slab.T2 = T2;
    slab.innov = innov;
    slab.replicate = replicate;
    slab.coeff_meta = meta_of(coeffs);
    slab.values = Array2D<double>(static_cast<std::size_t>(T1), static_cast<std::size_t>(T2));

    if (!use_fft) {
        for (int t = 1; t <= T1; ++t) {
            for (int s = 1; s <= T2; ++s) {
                NeumaierSum acc;
                for (int p = -R1; p <= R1; ++p)
                    for (int q = -R2; q <= R2; ++q)
                        acc.add(coeffs.at(p, q) *
                                eps(static_cast<std::size_t>(t - p - 1 + R1),
                                    static_cast<std::size_t>(s - q - 1 + R2)));
                slab.values(static_cast<std::size_t>(t - 1),
                            static_cast<std::size_t>(s - 1)) = acc.value();
            }
        }
        return slab;
    }

    const std::size_t real_n = static_cast<std::size_t>(P1) * P2;
    const std::size_t cplx_n = static_cast<std::size_t>(P1) * (P2 / 2 + 1);
    std::vector<double> ra(real_n, 0.0), rb(real_n, 0.0);
    std::vector<fftw_complex> ca(cplx_n), cb(cplx_n);

    for (long long i = 0; i < K1; ++i)
        for (long long j = 0; j < K2; ++j)
            ra[static_cast<std::size_t>(i) * P2 + static_cast<std::size_t>(j)] =
                coeffs.values(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    for (long long i = 0; i < E1; ++i)
        for (long long j = 0; j < E2; ++j)
            rb[static_cast<std::size_t>(i) * P2 + static_cast<std::size_t>(j)] =
                eps(static_cast<std::size_t>(i), static_cast<std::size_t>(j));

    PlanGuard fa, fb, bi;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fa.plan = fftw_plan_dft_r2c_2d(P1, P2, ra.data(), ca.data(), FFTW_ESTIMATE);
        fb.plan = fftw_plan_dft_r2c_2d(P1, P2, rb.data(), cb.data(), FFTW_ESTIMATE);
        bi.plan = fftw_plan_dft_c2r_2d(P1, P2, ca.data(), ra.data(), FFTW_ESTIMATE);
    }
    if (!fa.plan || !fb.plan || !bi.plan)
        throw resource_error("simulate_field: FFTW plan creation failed");
    fftw_execute(fa.plan);
    fftw_execute(fb.plan);
    for (std::size_t k = 0; k < cplx_n; ++k) {
        double re = ca[k][0] * cb[k][0] - ca[k][1] * cb[k][1];
        double im = ca[k][0] * cb[k][1] + ca[k][1] * cb[k][0];
        ca[k][0] = re;
        ca[k][1] = im;
    }
    fftw_execute(bi.plan);

    const double scale = 1.0 / fft_cells;
    for (int t = 1; t <= T1; ++t)
        for (int s = 1; s <= T2; ++s)
            slab.values(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(s - 1)) =
                scale * ra[static_cast<std::size_t>(t - 1 + 2LL * R1) * P2 +
                           static_cast<std::size_t>(s - 1 + 2LL * R2)];
    return slab;
}

double PartialSumTable::rectangle(long long n, long long m) const {
    if (n < 0 || m < 0 || static_cast<std::size_t>(n) >= prefix.rows() ||
        static_cast<std::size_t>(m) >= prefix.cols())
        throw std::invalid_argument("PartialSumTable::rectangle: out of range");
    return prefix(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
}

PartialSumTable partial_sums(const FieldSlab& slab, const std::vector<double>& lambdas,
                             double gamma,
                             const std::vector<std::pair<double, double>>& points) {
    if (!(gamma > 0.0)) throw std::invalid_argument("partial_sums: gamma must be positive");
    PartialSumTable table;
    table.prefix = Array2D<double>(static_cast<std::size_t>(slab.T1) + 1,
                                   static_cast<std::size_t>(slab.T2) + 1, 0.0);
    for (std::size_t i = 1; i < table.prefix.rows(); ++i)
        for (std::size_t j = 1; j < table.prefix.cols(); ++j)
            table.prefix(i, j) = table.prefix(i - 1, j) + table.prefix(i, j - 1) -
                                 table.prefix(i - 1, j - 1) + slab.values(i - 1, j - 1);

    for (double lambda : lambdas) {
        if (!(lambda > 0.0))
            throw std::invalid_argument("partial_sums: lambda must be positive");
        for (auto [x, y] : points) {
            if (!(x > 0.0) || !(y > 0.0))
                throw std::invalid_argument("partial_sums: points must be positive");
            PartialSumEntry e;
            e.lambda = lambda;
            e.gamma = gamma;
            e.x = x;
            e.y = y;
            e.n = floor_scale(lambda, 1.0, x);
            e.m = floor_scale(lambda, gamma, y);
            validate_rectangle(e.n, e.m, "partial_sums");
            if (e.n > slab.T1 || e.m > slab.T2)
                throw std::invalid_argument(
                    "partial_sums: rectangle " + std::to_string(e.n) + " x " +
                    std::to_string(e.m) + " exceeds the slab " + std::to_string(slab.T1) +
                    " x " + std::to_string(slab.T2));
            e.value = table.prefix(static_cast<std::size_t>(e.n),
                                   static_cast<std::size_t>(e.m));
            table.entries.push_back(e);
        }
    }
    return table;
}

std::vector<VarianceEstimate> replicate_variance(
    const coeff::CoefficientGrid& coeffs, const InnovationSpec& innov, double gamma,
    const std::vector<double>& lambdas, std::pair<double, double> point, int reps,
    unsigned threads, const SimOptions& opt) {
    if (reps < 2) throw std::invalid_argument("replicate_variance: reps must be >= 2");
    if (lambdas.empty())
        throw std::invalid_argument("replicate_variance: empty lambda grid");
    if (!(gamma > 0.0))
        throw std::invalid_argument("replicate_variance: gamma must be positive");
    auto [x, y] = point;
    long long n_max = 0, m_max = 0;
    for (double lambda : lambdas) {
        if (!(lambda > 0.0))
            throw std::invalid_argument("replicate_variance: lambda must be positive");
        long long n = floor_scale(lambda, 1.0, x), m = floor_scale(lambda, gamma, y);
        validate_rectangle(n, m, "replicate_variance");
        n_max = std::max(n_max, n);
        m_max = std::max(m_max, m);
    }

    const std::size_t L = lambdas.size();
    std::vector<double> samples(static_cast<std::size_t>(reps) * L);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        FieldSlab slab = simulate_field(coeffs, static_cast<int>(n_max),
                                        static_cast<int>(m_max), innov,
                                        static_cast<std::uint64_t>(r), opt);
        PartialSumTable table = partial_sums(slab, lambdas, gamma, {point});
        for (std::size_t k = 0; k < L; ++k)
            samples[r * L + k] = table.entries[k].value;
    });

    std::vector<VarianceEstimate> out(L);
    const double n = static_cast<double>(reps);
    for (std::size_t k = 0; k < L; ++k) {
        NeumaierSum mean_acc;
        for (int r = 0; r < reps; ++r) mean_acc.add(samples[static_cast<std::size_t>(r) * L + k]);
        const double mean = mean_acc.value() / n;
        NeumaierSum m2_acc, m4_acc;
        for (int r = 0; r < reps; ++r) {
            double d = samples[static_cast<std::size_t>(r) * L + k] - mean;
            m2_acc.add(d * d);
            m4_acc.add(d * d * d * d);
        }
        const double s2 = m2_acc.value() / (n - 1.0);
        const double m4 = m4_acc.value() / n;
        // variance of the unbiased sample variance, via the fourth moment
        double var_s2 = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
        out[k].lambda = lambdas[k];
        out[k].variance = s2;
        out[k].stderr_ = std::sqrt(std::max(0.0, var_s2));
        out[k].reps = reps;
    }
    return out;
}

double exact_variance(const coeff::CoefficientGrid& coeffs, double gamma, double lambda,
                      std::pair<double, double> point) {
    if (!(gamma > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("exact_variance: gamma and lambda must be positive");
    auto [x, y] = point;
    if (!(x > 0.0) || !(y > 0.0))
        throw std::invalid_argument("exact_variance: point must be positive");
    const long long n = floor_scale(lambda, 1.0, x), m = floor_scale(lambda, gamma, y);
    validate_rectangle(n, m, "exact_variance");

    const long long R1 = coeffs.R1, R2 = coeffs.R2;
    CoeffPrefix cp(coeffs);
    NeumaierSum total;
    const bool has_interior = m > 2 * R2;
    for (long long u = 1 - R1; u <= n + R1; ++u) {
        if (has_interior) {
            // v in [1+R2, m-R2]: the q-range is the full window, so G is
            // constant in v along the interior band.
            long long pl = std::max(-R1, 1 - u), ph = std::min(R1, n - u);
            double band = cp.box(pl, ph, -R2, R2);
            total.add(static_cast<double>(m - 2 * R2) * band * band);
            for (long long v = 1 - R2; v <= R2; ++v) {
                double g = cp.g(n, m, u, v);
                total.add(g * g);
            }
            for (long long v = m - R2 + 1; v <= m + R2; ++v) {
                double g = cp.g(n, m, u, v);
                total.add(g * g);
            }
        } else {
            for (long long v = 1 - R2; v <= m + R2; ++v) {
                double g = cp.g(n, m, u, v);
                total.add(g * g);
            }
        }
    }
    return total.value();
}

double g_weight(const coeff::CoefficientGrid& coeffs, long long n, long long m,
                long long u, long long v) {
    validate_rectangle(n, m, "g_weight");
    long long pl = std::max<long long>(-coeffs.R1, 1 - u);
    long long ph = std::min<long long>(coeffs.R1, n - u);
    long long ql = std::max<long long>(-coeffs.R2, 1 - v);
    long long qh = std::min<long long>(coeffs.R2, m - v);
    NeumaierSum acc;
    for (long long p = pl; p <= ph; ++p)
        for (long long q = ql; q <= qh; ++q)
            acc.add(coeffs.at(static_cast<int>(p), static_cast<int>(q)));
    return acc.value();
}

} // namespace lsc::sim
