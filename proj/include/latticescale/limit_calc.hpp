#pragma once

#include "latticescale/angular.hpp"
#include "latticescale/coeff_families.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace lsc::limit {

using Point = std::pair<double, double>;

// Hurst pair of a (possibly degenerate) fractional Brownian sheet.
struct FbsParams {
    double Hx = 0.5, Hy = 0.5; // each in [0, 1]; 0 and 1 permitted
};

// Covariance E B(p1) B(p2); all coordinates must be > 0.  Degenerate Hurst
// values use the discontinuous branch formulas with exact coordinate
// comparison.
double fbs_covariance(const FbsParams& p, Point p1, Point p2);

// Verify Cov(B(l1^Hx x, l2^Hy y) pairs) = l1^{2Hx} l2^{2Hy} Cov(pairs) on
// all pairs from the given points, to tolerance.
bool self_similarity_check(const FbsParams& p, std::pair<double, double> scales,
                           const std::vector<Point>& points, double tol = 1e-10);

struct AngularIntegrals {
    double L1_plus = 0.0, L1_minus = 0.0; // int a_inf(+-1, s) ds
    double L2_plus = 0.0, L2_minus = 0.0; // int a_inf(t, +-1) dt (equal)
};

// Quadrature of the angular integrals with analytic tail control.  Errors
// when the integrand's power-law decay makes the integral divergent
// (q2 <= 1 for L1, q1 <= 1 for L2).
AngularIntegrals angular_integrals(double q1, double q2, const AngularFunction& L0);

enum class KernelKind { h0, h1, h2, h1_tilde, h2_tilde };

namespace detail {
class AsymptoticKernel; // internal a_inf machinery (row integrals, caches)
}

// A prepared kernel evaluator: decay exponents, angular function, cached
// angular integrals, and internal row-integral tables.
struct KernelSpec {
    KernelKind kind = KernelKind::h1;
    double q1 = 0.0, q2 = 0.0;
    AngularIntegrals cached; // filled with the integrals the kind requires
    std::shared_ptr<const detail::AsymptoticKernel> impl;
};

KernelSpec make_kernel_spec(KernelKind kind, double q1, double q2,
                            const AngularFunction& L0);

// Kernel value at (u,v) for the rectangle (0,x] x (0,y].  h1/h2 use the
// closed power forms; h0 integrates a_inf over the rectangle (outside
// points) or its complement (inside points); h1_tilde/h2_tilde are the
// partial-row integrals times the opposite extent.
double kernel_h(const KernelSpec& spec, Point rect, Point point);

struct SigmaNorms {
    double sigma1 = 0.0, sigma2 = 0.0;
    std::optional<double> sigma1_tilde, sigma2_tilde; // set when Q_tilde_i > 1
};

struct SigmaNormOptions {
    // Evaluate the norm by genuine nested 2-D quadrature instead of the
    // separable 1-D reduction (self-consistency check path).
    bool via_2d = false;
    double rel_tol = 1e-8;
};

// L2 norms of h_i(1,1;.,.) (and of the tilde kernels when they are the
// attributed scale, i.e. Q_tilde_i > 1).
SigmaNorms sigma_norms(double q1, double q2, const AngularFunction& L0,
                       const SigmaNormOptions& opt = {});
SigmaNorms sigma_norms(const KernelSpec& spec, const SigmaNormOptions& opt = {});

// Covariance of the balanced limit V0 at two points: the L2 inner product
// of the two h0 kernels, by nested adaptive quadrature over a domain
// truncated where the rho-envelope certifies the tail below rel_tol.
double v0_covariance(double q1, double q2, const AngularFunction& L0, Point p1,
                     Point p2, double rel_tol = 1e-4);

struct EdgeSigmas {
    double sigma2_edge1 = 0.0; // 2 sum_v (row-tail sums)^2
    double sigma2_edge2 = 0.0; // transposed version
    double truncation_bound = 0.0; // envelope bound on the neglected series mass
    // Convergence of the infinite series requires Q_edge2 < 1 (for sigma1)
    // and Q_edge1 < 1 (for sigma2); on truncated grids the finite value
    // always exists but is meaningless as a limit when the flag is false.
    bool convergent1 = true, convergent2 = true;
};

EdgeSigmas edge_sigmas(const coeff::CoefficientGrid& coeffs);

// Check of the boundary identity at gamma = 1: the lambda-normalized sum of
// G^2 over lattice sites within distance delta*lambda of the rectangle
// boundary, minus (x sigma2_edge1 + y sigma2_edge2).  Requires q1 = q2 and
// both Q_edge < 1 (edge-dominated regime).
double boundary_sum_identity_check(const coeff::CoefficientGrid& coeffs, double x,
                                   double y, double lambda, double delta);

} // namespace lsc::limit
