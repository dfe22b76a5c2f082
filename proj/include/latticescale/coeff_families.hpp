#pragma once

#include "latticescale/angular.hpp"
#include "latticescale/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lsc::coeff {

enum class Family : std::uint8_t {
    isotropic_frac_laplacian = 0,
    heat_operator = 1,
    separable = 2,
    pair_difference = 3,
    synthetic = 4,
};

Family family_from_string(const std::string& name);
std::string to_string(Family f);

// Truncated moving-average coefficients a(t,s) for t in [-R1,R1],
// s in [-R2,R2], plus the decay metadata used by the region algebra and
// the truncation-error bounds.
struct CoefficientGrid {
    Array2D<double> values; // (2R1+1) x (2R2+1); (t,s) stored at (t+R1, s+R2)
    int R1 = 0, R2 = 0;
    double q1 = 0.0, q2 = 0.0;
    Family family = Family::synthetic;
    std::vector<double> params;
    double zero_sum_residual = 0.0;

    bool in_range(int t, int s) const {
        return t >= -R1 && t <= R1 && s >= -R2 && s <= R2;
    }
    // Coefficient value, zero outside the stored window.
    double at(int t, int s) const {
        if (!in_range(t, s)) return 0.0;
        return values(static_cast<std::size_t>(t + R1),
                      static_cast<std::size_t>(s + R2));
    }
    double& ref(int t, int s) {
        return values.at(static_cast<std::size_t>(t + R1),
                         static_cast<std::size_t>(s + R2));
    }
};

// Fractional-differencing weights psi_j(d) = Gamma(j-d) / (Gamma(j+1) Gamma(-d)).
struct FracWeights {
    double d = 0.0;
    std::vector<double> weights; // psi_0 .. psi_J
};

// Pointwise envelope rho(t,s) = (|t|^q1 + |s|^q2)^{-1} with a fitted
// constant C such that |a(t,s)| <= C rho(t,s) on the grid.
struct RhoEnvelope {
    double q1 = 0.0, q2 = 0.0;
    double C = 0.0;
    double rho(double t, double s) const;
};

// psi weights by the stable ratio recursion psi_j = psi_{j-1} (j-1-d)/j.
FracWeights psi_weights(double d, int J);

// j-step transition probabilities of the symmetric nearest-neighbour random
// walk on Z^2, returned on the square [-j, j]^2 (offset j).
Array2D<double> rw2d_transition(int j);

// u-step transition probabilities of the lazy 1-D walk (stay with
// probability theta, step +-1 with probability (1-theta)/2 each),
// returned as a vector over v in [-u, u] (offset u).
std::vector<double> rw1d_lazy_transition(double theta, int u);

struct IsotropicOptions {
    double tol = 1e-7;     // absolute accuracy target per coefficient
    int max_grid = 8192;   // cap on the spectral inversion grid
};

// Fractionally integrated isotropic-Laplacian coefficients, d in (-1, 0),
// on [-R, R]^2.  Computed by inverting the exact lattice symbol
// (1 - (cos x + cos y)/2)^{-d} with a certified aliasing bound.
CoefficientGrid isotropic_coeffs(double d, int R, const IsotropicOptions& opt = {});

// Reference implementation of the same coefficients by direct summation of
// the series sum_j psi_j(-d) p_j(u,v), truncated at J (diagnostic/oracle
// path; cost grows like J * R^2, use small R).
CoefficientGrid isotropic_coeffs_series(double d, int R, int J);

// Default series cap J = c R^2 (diffusive scaling of the walk).
int isotropic_series_cap(int R, int c = 4);

// Discrete-heat-operator coefficients a(u,v) = psi_u(-d) q_theta(u,v) 1(u>=0),
// d in (-3/4, 0), theta in (0,1), on u in [0, R1], |v| <= u.
CoefficientGrid heat_coeffs(double d, double theta, int R1);

// Separable fractional integration a(u,v) = psi_u(-d1) psi_v(-d2) on
// [0,R1] x [0,R2].
CoefficientGrid separable_coeffs(double d1, double d2, int R1, int R2);

// The finitely dependent exact-oracle model a(0,0)=1, a(0,1)=-1.
CoefficientGrid pair_difference_coeffs();

// Pure power-law family a_inf(t,s) = (|t|^2 + |s|^{2 q2/q1})^{-q1/2}
// L0(t / (|t|^2 + |s|^{2 q2/q1})^{1/2}) off the origin, with the origin
// value chosen so the grid sums to zero exactly.
CoefficientGrid synthetic_coeffs(double q1, double q2, const AngularFunction& L0,
                                 int R1, int R2);

// Exact (compensated) sum of all stored values.
double zero_sum_residual(const CoefficientGrid& grid);

// Copy of the grid with the origin value adjusted so the total sum is zero.
CoefficientGrid with_zero_sum_enforced(const CoefficientGrid& grid);

// Upper bound on sum of rho(t,s) over the complement of the window
// [-R1,R1] x [-R2,R2], by integral comparison.  Requires Q < 1.
double rho_tail_mass(double q1, double q2, int R1, int R2);

// Smallest C with |a(t,s)| <= C rho(t,s) across the stored grid.
RhoEnvelope fit_envelope_constant(const CoefficientGrid& grid);

// Far-field constant of the isotropic family: A = Gamma(1-d) / (pi Gamma(d)).
double isotropic_far_field_constant(double d);

// The angular function L0 of the family's coefficient asymptotics:
// constant A(d) for isotropic, the explicit one-sided profile for the heat
// operator, the stored table for synthetic.  Errors for families without an
// angular form (separable, pair_difference).
AngularFunction family_angular(const CoefficientGrid& grid);

} // namespace lsc::coeff
