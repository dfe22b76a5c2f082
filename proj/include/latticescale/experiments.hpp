#pragma once

#include "latticescale/coeff_families.hpp"
#include "latticescale/lattice_sim.hpp"
#include "latticescale/region_atlas.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace lsc::expt {

struct ScanConfig {
    coeff::CoefficientGrid grid;
    sim::InnovationSpec innov;
    std::vector<double> gamma_grid;
    std::vector<double> lambda_grid; // >= 3 points for slope fits
    std::pair<double, double> point{1.0, 1.0};
    int reps = 200;
    bool use_exact_variance = true;
    // Adjust the origin coefficient so the truncated grid sums to zero
    // before scanning (removes the spurious short-range term the truncation
    // residual would otherwise inject).
    bool enforce_zero_sum = true;
    unsigned threads = 1;
    // Curvature threshold (in log-variance units) above which the slope fit
    // falls back to the largest three lambdas.
    double curvature_threshold = 0.02;
};

struct SlopeFit {
    double gamma = 0.0;
    double H_hat = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;                  // per-lambda, full fit
    std::vector<std::pair<double, double>> data;    // (lambda, variance)
    double H_theory = std::numeric_limits<double>::quiet_NaN();
    bool theory_available = false;
    bool used_tail_refit = false;
};

// Fit H from Var S_{lambda,gamma} ~ lambda^{2H}: least squares of
// (log lambda, (1/2) log Var).  Variances are exact G-sums by default.
SlopeFit variance_scan(const ScanConfig& cfg, double gamma);

struct TransitionEntry {
    double gamma = 0.0;
    double H_hat = 0.0;
    double H_theory = std::numeric_limits<double>::quiet_NaN();
    double abs_diff = std::numeric_limits<double>::quiet_NaN();
    double stderr_ = 0.0;
    bool theory_available = false;
    bool flagged = false; // |H_hat - H_theory| > 3 * stderr
};

struct TransitionReport {
    std::vector<TransitionEntry> entries;
    double detected_kink = std::numeric_limits<double>::quiet_NaN();
    double gamma0_theory = std::numeric_limits<double>::quiet_NaN();
    bool kink_claimed = false;
};

// Scan gamma, fit H(gamma), locate the kink by two-segment piecewise-linear
// least squares with the breakpoint scanned on grid midpoints.  The kink is
// only claimed when the gamma grid brackets gamma0 with >= 3 points per side.
TransitionReport transition_scan(const ScanConfig& cfg);

struct CovCheckEntry {
    std::pair<double, double> p1, p2;
    double empirical = 0.0;
    double theory = 0.0;
    double se = 0.0;
    double n_se = 0.0;
    bool pass = false;
};

struct CovCheckReport {
    double gamma = 0.0;
    double lambda = 0.0;
    int reps = 0;
    double H_gamma = 0.0; // normalization exponent used
    std::string limit_description;
    std::vector<CovCheckEntry> entries;
};

// Compare the empirical covariance of lambda^{-H(gamma)} S at the largest
// lambda against scale^2 * fbs_covariance per the region's limit descriptor;
// pass/fail at 4 standard errors per pair.
CovCheckReport covariance_check(
    const ScanConfig& cfg, double gamma,
    const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
        point_pairs);

enum class ReportFormat { csv, json };

// Serialize reports deterministically; every file embeds the config hash,
// seed, and code version.  Returns the list of files written.
std::vector<std::string> emit_report(const SlopeFit& fit, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt);
std::vector<std::string> emit_report(const TransitionReport& rep, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt);
std::vector<std::string> emit_report(const CovCheckReport& rep, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt);

// Hash of the canonicalized configuration (used in report provenance).
std::uint64_t config_hash(const ScanConfig& cfg);

// Theoretical H(gamma) for the grid's model, when this library states one:
// pair_difference has H = 1/2 for every gamma (its vertical edge variance
// vanishes, so the gamma/2 branch has zero coefficient); other families use
// the region algebra (ND regions only).
double theory_exponent(const coeff::CoefficientGrid& grid, double gamma,
                       bool* available = nullptr);

} // namespace lsc::expt
