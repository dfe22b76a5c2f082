#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lsc::atlas {

// Every derived exponent of the model with coefficient decay (q1, q2).
struct ModelExponents {
    double q1 = 0.0, q2 = 0.0;
    double Q = 0.0;            // 1/q1 + 1/q2
    double H1 = 0.0, H2 = 0.0; // 1/2 + q_i (Q - 1)
    double H1_tilde = 0.0, H2_tilde = 0.0; // 1 - (q_i/2)(2 - Q)
    double gamma0 = 0.0;       // q1/q2
    double gamma0_edge1 = 0.0; // 1 / (2 q2 (1 - Q))
    double gamma0_edge2 = 0.0; // 2 q1 (1 - Q)
    double Q_edge1 = 0.0;      // 3/(2 q1) + 1/q2
    double Q_edge2 = 0.0;      // 1/q1 + 3/(2 q2)
    double Q_tilde1 = 0.0;     // 1/(2 q1) + 1/q2
    double Q_tilde2 = 0.0;     // 1/q1 + 1/(2 q2)
};

enum class RegionTag {
    R11,
    R12,
    R21,
    R22_plus,
    R22_minus,
    R23,
    R32,
    R33,
    SRD_like,
    boundary,
};

std::string to_string(RegionTag tag);

struct RegionId {
    RegionTag tag = RegionTag::boundary;
    // Populated when tag == boundary: names the classifier within tolerance
    // of its critical value.
    std::string boundary_detail;
};

enum class ScaleSymbol {
    sigma1,
    sigma2,
    sigma1_tilde,
    sigma2_tilde,
    sigma_edge1,
    sigma_edge2,
    mixed_edge,
    V0_kernel,
};

std::string to_string(ScaleSymbol s);

enum class TransitionSide { plus, minus, balanced };

std::string to_string(TransitionSide s);

// Identity of the scaling limit for a given region and gamma: the
// fractional-Brownian-sheet Hurst pair (absent for the balanced kernel
// limits, which are not sheets) and the scale constant attribution.
struct LimitDescriptor {
    std::optional<std::pair<double, double>> hurst_pair;
    ScaleSymbol scale = ScaleSymbol::sigma1;
    TransitionSide side = TransitionSide::plus;
    std::string description;
};

// All exponents; errors on nonpositive q.
ModelExponents exponents(double q1, double q2);

// Region classification from the sign pattern of (Q, Q_edge_i, Q_tilde_i)
// against 1, with a boundary tolerance.  Errors when Q <= 0 or Q >= 2.
RegionId classify(double q1, double q2, double tol = 1e-9);

// Critical gamma of the scaling transition for the region.
double critical_gamma(const ModelExponents& exps, const RegionId& region);

// Normalization exponent H(gamma): Var S ~ lambda^{2 H(gamma)}.  Defined
// for the ND regions (Q < 1) only.
double normalization_exponent(const ModelExponents& exps, const RegionId& region,
                              double gamma);

// Limit-process identity per region and gamma.
LimitDescriptor limit_descriptor(const ModelExponents& exps, const RegionId& region,
                                 double gamma);

struct PhasePoint {
    double inv_q1 = 0.0, inv_q2 = 0.0;
    ModelExponents exps;
    RegionId region;
};

// Classify a list of sample points given as (1/q1, 1/q2); boundary points
// are tagged rather than rejected.
std::vector<PhasePoint> phase_diagram(
    const std::vector<std::pair<double, double>>& inv_points, double tol = 1e-9);

} // namespace lsc::atlas
