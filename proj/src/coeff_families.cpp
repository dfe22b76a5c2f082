#include "latticescale/coeff_families.hpp"

#include "latticescale/errors.hpp"
#include "latticescale/summation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lsc::coeff {

namespace {

constexpr double pi = std::numbers::pi;

// int_0^inf (1 + w^q)^{-1} dw = (pi/q) / sin(pi/q), for q > 1.
double power_integral(double q) {
    return (pi / q) / std::sin(pi / q);
}

CoefficientGrid make_grid(int R1, int R2, double q1, double q2, Family family,
                          std::vector<double> params) {
    CoefficientGrid g;
    g.R1 = R1;
    g.R2 = R2;
    g.q1 = q1;
    g.q2 = q2;
    g.family = family;
    g.params = std::move(params);
    g.values = Array2D<double>(static_cast<std::size_t>(2 * R1 + 1),
                               static_cast<std::size_t>(2 * R2 + 1), 0.0);
    return g;
}

void finalize_residual(CoefficientGrid& g) { g.zero_sum_residual = zero_sum_residual(g); }

// Lattice sum S(d) = sum_{(k,l) != 0} (g(k) + g(l))^{d-1} with g(0) = 0,
// g(k) = (|k| - 1/2)^2: alias sites of a window point are at squared
// distance >= N^2 (g(k) + g(l)), so the total aliasing error is bounded by
// C_env N^{2(d-1)} S(d).
double alias_lattice_sum(double d) {
    const int K = 64;
    NeumaierSum s;
    for (int k = -K; k <= K; ++k) {
        for (int l = -K; l <= K; ++l) {
            if (k == 0 && l == 0) continue;
            double gk = k == 0 ? 0.0 : (std::abs(k) - 0.5) * (std::abs(k) - 0.5);
            double gl = l == 0 ? 0.0 : (std::abs(l) - 0.5) * (std::abs(l) - 0.5);
            s.add(std::pow(gk + gl, d - 1.0));
        }
    }
    // annulus tail beyond the K-square, integral comparison
    double tail = pi * std::pow(static_cast<double>(K), 2.0 * d) / (-d);
    return s.value() + tail;
}

} // namespace

Family family_from_string(const std::string& name) {
    if (name == "isotropic") return Family::isotropic_frac_laplacian;
    if (name == "heat") return Family::heat_operator;
    if (name == "separable") return Family::separable;
    if (name == "pair-difference" || name == "pair_difference")
        return Family::pair_difference;
    if (name == "synthetic") return Family::synthetic;
    throw std::invalid_argument("unknown coefficient family: " + name);
}

std::string to_string(Family f) {
    switch (f) {
        case Family::isotropic_frac_laplacian: return "isotropic";
        case Family::heat_operator: return "heat";
        case Family::separable: return "separable";
        case Family::pair_difference: return "pair-difference";
        case Family::synthetic: return "synthetic";
    }
    throw std::invalid_argument("bad family value");
}

double RhoEnvelope::rho(double t, double s) const {
    return 1.0 / (std::pow(std::abs(t), q1) + std::pow(std::abs(s), q2));
}

FracWeights psi_weights(double d, int J) {
    if (d == 0.0) throw std::invalid_argument("psi_weights: d = 0 is degenerate");
    if (std::abs(d) >= 1.0)
        throw std::invalid_argument("psi_weights: |d| must be < 1");
    if (J < 0) throw std::invalid_argument("psi_weights: J must be >= 0");
    FracWeights w;
    w.d = d;
    w.weights.resize(static_cast<std::size_t>(J) + 1);
    w.weights[0] = 1.0;
    for (int j = 1; j <= J; ++j)
        w.weights[j] = w.weights[j - 1] * (static_cast<double>(j - 1) - d) / j;
    return w;
}

Array2D<double> rw2d_transition(int j) {
    if (j < 0) throw std::invalid_argument("rw2d_transition: j must be >= 0");
    Array2D<double> p(2 * static_cast<std::size_t>(j) + 1,
                      2 * static_cast<std::size_t>(j) + 1, 0.0);
    p(j, j) = 1.0;
    // iterate the 1-step kernel: mass 1/4 to each axis neighbour
    for (int step = 1; step <= j; ++step) {
        Array2D<double> next(p.rows(), p.cols(), 0.0);
        int lo = j - step, hi = j + step;
        for (int u = lo; u <= hi; ++u) {
            for (int v = lo; v <= hi; ++v) {
                double acc = 0.0;
                if (u > 0) acc += p(u - 1, v);
                if (u < 2 * j) acc += p(u + 1, v);
                if (v > 0) acc += p(u, v - 1);
                if (v < 2 * j) acc += p(u, v + 1);
                next(u, v) = 0.25 * acc;
            }
        }
        p = std::move(next);
    }
    return p;
}

std::vector<double> rw1d_lazy_transition(double theta, int u) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("rw1d_lazy_transition: theta must be in (0,1)");
    if (u < 0) throw std::invalid_argument("rw1d_lazy_transition: u must be >= 0");
    std::vector<double> q(2 * static_cast<std::size_t>(u) + 1, 0.0);
    q[u] = 1.0;
    double side = 0.5 * (1.0 - theta);
    for (int step = 1; step <= u; ++step) {
        std::vector<double> next(q.size(), 0.0);
        for (int v = u - step; v <= u + step; ++v) {
            double acc = theta * q[v];
            if (v > 0) acc += side * q[v - 1];
            if (v < 2 * u) acc += side * q[v + 1];
            next[v] = acc;
        }
        q = std::move(next);
    }
    return q;
}

int isotropic_series_cap(int R, int c) { return c * R * R; }

double isotropic_far_field_constant(double d) {
    if (!(d > -1.0 && d < 0.0))
        throw std::invalid_argument("isotropic_far_field_constant: d must be in (-1,0)");
    // Gamma(d) < 0 for d in (-1,0), so A < 0.
    return -std::exp(std::lgamma(1.0 - d) - std::lgamma(d)) / pi;
}

CoefficientGrid isotropic_coeffs(double d, int R, const IsotropicOptions& opt) {
    if (!(d > -1.0 && d < 0.0))
        throw std::invalid_argument("isotropic_coeffs: d must be in (-1, 0)");
    if (R < 1) throw std::invalid_argument("isotropic_coeffs: R must be >= 1");

    // Invert the exact symbol (1 - (cos x + cos y)/2)^{-d} on an N-periodic
    // frequency grid; the result equals a(u,v) plus aliases at distance >= N-R,
    // bounded via the far-field envelope.
    double C_env = 3.0 * std::abs(isotropic_far_field_constant(d));
    double S = alias_lattice_sum(d);
    int N = 64;
    while (N < 4 * (R + 1)) N *= 2;
    if (N > opt.max_grid)
        throw resource_error("isotropic_coeffs: window radius " + std::to_string(R) +
                             " exceeds the grid cap " + std::to_string(opt.max_grid));
    while (C_env * std::pow(static_cast<double>(N), 2.0 * (d - 1.0)) * S > opt.tol) {
        N *= 2;
        if (N > opt.max_grid)
            throw resource_error(
                "isotropic_coeffs: aliasing tolerance unreachable within grid cap (tol " +
                std::to_string(opt.tol) + ")");
    }

    const int L = N / 2 + 1; // cosine-grid size, logical period N
    std::vector<double> buf(static_cast<std::size_t>(L) * L);
    for (int m = 0; m < L; ++m) {
        double cm = std::cos(2.0 * pi * m / N);
        for (int n = 0; n < L; ++n) {
            double cn = std::cos(2.0 * pi * n / N);
            double base = 1.0 - 0.5 * (cm + cn);
            buf[static_cast<std::size_t>(m) * L + n] = std::pow(base, -d);
        }
    }
    fftw_plan plan = fftw_plan_r2r_2d(L, L, buf.data(), buf.data(), FFTW_REDFT00,
                                      FFTW_REDFT00, FFTW_ESTIMATE);
    if (!plan) throw resource_error("isotropic_coeffs: FFTW plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    CoefficientGrid g = make_grid(R, R, 2.0 * (1.0 - d), 2.0 * (1.0 - d),
                                  Family::isotropic_frac_laplacian, {d});
    double scale = 1.0 / (static_cast<double>(N) * N);
    for (int u = -R; u <= R; ++u)
        for (int v = -R; v <= R; ++v)
            g.ref(u, v) =
                scale * buf[static_cast<std::size_t>(std::abs(u)) * L + std::abs(v)];
    finalize_residual(g);
    return g;
}

CoefficientGrid isotropic_coeffs_series(double d, int R, int J) {
    if (!(d > -1.0 && d < 0.0))
        throw std::invalid_argument("isotropic_coeffs_series: d must be in (-1, 0)");
    if (R < 1 || J < 0)
        throw std::invalid_argument("isotropic_coeffs_series: bad R or J");

    FracWeights psi = psi_weights(-d, J);
    CoefficientGrid g = make_grid(R, R, 2.0 * (1.0 - d), 2.0 * (1.0 - d),
                                  Family::isotropic_frac_laplacian, {d});
    Array2D<NeumaierSum> acc(static_cast<std::size_t>(2 * R + 1),
                             static_cast<std::size_t>(2 * R + 1));

    // walk transition table, grown in place step by step
    std::vector<double> p{1.0}; // square table of size (2j+1)
    int j = 0;
    auto add_term = [&](int jj) {
        double w = psi.weights[static_cast<std::size_t>(jj)];
        int lim = std::min(jj, R);
        for (int u = -lim; u <= lim; ++u)
            for (int v = -lim; v <= lim; ++v)
                acc(static_cast<std::size_t>(u + R), static_cast<std::size_t>(v + R))
                    .add(w * p[static_cast<std::size_t>((u + jj) * (2 * jj + 1) + (v + jj))]);
    };
    add_term(0);
    for (j = 1; j <= J; ++j) {
        int n = 2 * j + 1;
        std::vector<double> next(static_cast<std::size_t>(n) * n, 0.0);
        int prev_n = n - 2;
        auto prev_at = [&](int u, int v) -> double {
            if (std::abs(u) > j - 1 || std::abs(v) > j - 1) return 0.0;
            return p[static_cast<std::size_t>((u + j - 1) * prev_n + (v + j - 1))];
        };
        for (int u = -j; u <= j; ++u)
            for (int v = -j; v <= j; ++v)
                next[static_cast<std::size_t>((u + j) * n + (v + j))] =
                    0.25 * (prev_at(u - 1, v) + prev_at(u + 1, v) + prev_at(u, v - 1) +
                            prev_at(u, v + 1));
        p = std::move(next);
        add_term(j);
    }
    for (int u = -R; u <= R; ++u)
        for (int v = -R; v <= R; ++v)
            g.ref(u, v) =
                acc(static_cast<std::size_t>(u + R), static_cast<std::size_t>(v + R)).value();
    finalize_residual(g);
    return g;
}

CoefficientGrid heat_coeffs(double d, double theta, int R1) {
    if (!(d > -0.75 && d < 0.0))
        throw std::invalid_argument("heat_coeffs: d must be in (-3/4, 0)");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("heat_coeffs: theta must be in (0,1)");
    if (R1 < 1) throw std::invalid_argument("heat_coeffs: R1 must be >= 1");

    double q1 = 1.5 - d;
    CoefficientGrid g = make_grid(R1, R1, q1, 2.0 * q1, Family::heat_operator,
                                  {d, theta});
    FracWeights psi = psi_weights(-d, R1);
    std::vector<double> row{1.0}; // q_theta(u, .) over v in [-u, u]
    double side = 0.5 * (1.0 - theta);
    for (int u = 0; u <= R1; ++u) {
        if (u > 0) {
            std::vector<double> next(row.size() + 2, 0.0);
            for (std::size_t i = 0; i < next.size(); ++i) {
                double acc = 0.0;
                if (i >= 2) acc += side * row[i - 2];
                if (i >= 1 && i - 1 < row.size()) acc += theta * row[i - 1];
                if (i < row.size()) acc += side * row[i];
                next[i] = acc;
            }
            row = std::move(next);
        }
        double w = psi.weights[static_cast<std::size_t>(u)];
        for (int v = -u; v <= u; ++v)
            g.ref(u, v) = w * row[static_cast<std::size_t>(v + u)];
    }
    finalize_residual(g);
    return g;
}

CoefficientGrid separable_coeffs(double d1, double d2, int R1, int R2) {
    auto check = [](double d, const char* name) {
        if (!(std::abs(d) < 0.5) || d == 0.0)
            throw std::invalid_argument(std::string("separable_coeffs: ") + name +
                                        " must be in (-1/2, 1/2) \\ {0}");
    };
    check(d1, "d1");
    check(d2, "d2");
    if (R1 < 1 || R2 < 1)
        throw std::invalid_argument("separable_coeffs: radii must be >= 1");

    CoefficientGrid g = make_grid(R1, R2, 1.0 - d1, 1.0 - d2, Family::separable,
                                  {d1, d2});
    FracWeights w1 = psi_weights(-d1, R1);
    FracWeights w2 = psi_weights(-d2, R2);
    for (int u = 0; u <= R1; ++u)
        for (int v = 0; v <= R2; ++v)
            g.ref(u, v) = w1.weights[static_cast<std::size_t>(u)] *
                          w2.weights[static_cast<std::size_t>(v)];
    finalize_residual(g);
    return g;
}

CoefficientGrid pair_difference_coeffs() {
    CoefficientGrid g = make_grid(0, 1, std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity(),
                                  Family::pair_difference, {});
    g.ref(0, 0) = 1.0;
    g.ref(0, 1) = -1.0;
    finalize_residual(g);
    return g;
}

CoefficientGrid synthetic_coeffs(double q1, double q2, const AngularFunction& L0,
                                 int R1, int R2) {
    if (!(q1 > 0.0 && q2 > 0.0))
        throw std::invalid_argument("synthetic_coeffs: q1, q2 must be positive");
    double Q = 1.0 / q1 + 1.0 / q2;
    if (!(Q < 1.0))
        throw std::invalid_argument(
            "synthetic_coeffs: requires Q = 1/q1 + 1/q2 < 1 (got Q = " +
            std::to_string(Q) + ")");
    if (!std::isfinite(L0.max_abs()))
        throw std::invalid_argument("synthetic_coeffs: angular samples must be bounded");
    if (R1 < 1 || R2 < 1)
        throw std::invalid_argument("synthetic_coeffs: radii must be >= 1");

    std::vector<double> params = L0.samples();
    CoefficientGrid g = make_grid(R1, R2, q1, q2, Family::synthetic, std::move(params));
    double expo = 2.0 * q2 / q1;
    NeumaierSum total;
    for (int t = -R1; t <= R1; ++t) {
        for (int s = -R2; s <= R2; ++s) {
            if (t == 0 && s == 0) continue;
            double r2 = static_cast<double>(t) * t + std::pow(std::abs(s), expo);
            double val = std::pow(r2, -0.5 * q1) * L0(t / std::sqrt(r2));
            g.ref(t, s) = val;
            total.add(val);
        }
    }
    g.ref(0, 0) = -total.value(); // zero-sum enforced exactly at the origin
    finalize_residual(g);
    return g;
}

double zero_sum_residual(const CoefficientGrid& grid) {
    NeumaierSum s;
    for (int t = -grid.R1; t <= grid.R1; ++t)
        for (int v = -grid.R2; v <= grid.R2; ++v) s.add(grid.at(t, v));
    return s.value();
}

CoefficientGrid with_zero_sum_enforced(const CoefficientGrid& grid) {
    CoefficientGrid g = grid;
    g.ref(0, 0) -= g.zero_sum_residual;
    g.zero_sum_residual = zero_sum_residual(g);
    return g;
}

double rho_tail_mass(double q1, double q2, int R1, int R2) {
    double Q = 1.0 / q1 + 1.0 / q2;
    if (!(Q < 1.0)) throw std::invalid_argument("rho_tail_mass: requires Q < 1");
    if (R1 < 1 || R2 < 1) throw std::invalid_argument("rho_tail_mass: radii must be >= 1");
    // |t| > R1, any s: row sums bounded by |t|^{-q1} + 2 I(q2) |t|^{-p1},
    // p1 = q1 (1 - 1/q2) > 1 under Q < 1; then integral-compare over |t| > R1.
    double p1 = q1 * (1.0 - 1.0 / q2);
    double tailA = 2.0 * (std::pow(R1, 1.0 - q1) / (q1 - 1.0) +
                          2.0 * power_integral(q2) * std::pow(R1, 1.0 - p1) / (p1 - 1.0));
    // |t| <= R1, |s| > R2: bound rho <= |s|^{-q2} per row.
    double tailB = (2.0 * R1 + 1.0) * 2.0 * std::pow(R2, 1.0 - q2) / (q2 - 1.0);
    return tailA + tailB;
}

RhoEnvelope fit_envelope_constant(const CoefficientGrid& grid) {
    RhoEnvelope env;
    env.q1 = grid.q1;
    env.q2 = grid.q2;
    double c = 0.0;
    for (int t = -grid.R1; t <= grid.R1; ++t) {
        for (int s = -grid.R2; s <= grid.R2; ++s) {
            double denom = std::pow(std::abs(static_cast<double>(t)), grid.q1) +
                           std::pow(std::abs(static_cast<double>(s)), grid.q2);
            c = std::max(c, std::abs(grid.at(t, s)) * denom);
        }
    }
    env.C = c;
    return env;
}

AngularFunction family_angular(const CoefficientGrid& grid) {
    switch (grid.family) {
        case Family::isotropic_frac_laplacian: {
            double d = grid.params.at(0);
            return AngularFunction::constant(isotropic_far_field_constant(d));
        }
        case Family::heat_operator: {
            double d = grid.params.at(0);
            double theta = grid.params.at(1);
            double gd = std::exp(std::lgamma(d)); // |Gamma(d)|, d in (-3/4, 0)
            double norm = -1.0 / (gd * std::sqrt(2.0 * pi * (1.0 - theta)));
            double half = 0.5 / (1.0 - theta);
            return AngularFunction::from_function([=](double z) {
                if (z <= 0.0) return 0.0;
                double root = std::sqrt(std::max(0.0, 1.0 / (z * z) - 1.0));
                return norm * std::pow(z, d - 1.5) * std::exp(-root * half);
            });
        }
        case Family::synthetic:
            return AngularFunction::from_samples(grid.params);
        case Family::separable:
        case Family::pair_difference:
            throw model_error("family " + to_string(grid.family) +
                              " has no angular coefficient asymptotics");
    }
    throw std::invalid_argument("bad family value");
}

} // namespace lsc::coeff
