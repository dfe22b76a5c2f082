#include "latticescale/experiments.hpp"

#include "latticescale/errors.hpp"
#include "latticescale/io.hpp"
#include "latticescale/limit_calc.hpp"
#include "latticescale/parallel.hpp"
#include "latticescale/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsc::expt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string innovation_name(rng::InnovationFamily f) {
    switch (f) {
        case rng::InnovationFamily::gaussian: return "gaussian";
        case rng::InnovationFamily::rademacher: return "rademacher";
        case rng::InnovationFamily::centered_uniform: return "centered-uniform";
    }
    return "unknown";
}

coeff::CoefficientGrid prepared_grid(const ScanConfig& cfg) {
    return cfg.enforce_zero_sum ? coeff::with_zero_sum_enforced(cfg.grid) : cfg.grid;
}

std::vector<double> checked_lambdas(const ScanConfig& cfg) {
    if (cfg.lambda_grid.size() < 3)
        throw std::invalid_argument(
            "variance_scan: at least three lambdas are required for a slope fit");
    std::vector<double> lambdas = cfg.lambda_grid;
    std::sort(lambdas.begin(), lambdas.end());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0))
            throw std::invalid_argument("variance_scan: lambdas must be positive");
        if (i > 0 && lambdas[i] == lambdas[i - 1])
            throw std::invalid_argument("variance_scan: lambdas must be distinct");
    }
    return lambdas;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 1.0;
    std::vector<double> residuals;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit_line: abscissas are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.residuals.resize(n);
    double ssr = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        fit.residuals[i] = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssr += fit.residuals[i] * fit.residuals[i];
        sst += (ys[i] - my) * (ys[i] - my);
    }
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    fit.slope_se =
        n > 2 ? std::sqrt(std::max(0.0, ssr / (static_cast<double>(n) - 2.0)) / sxx)
              : 0.0;
    return fit;
}

// gamma0 of the grid's scaling transition when the region algebra states one
// (negatively dependent regions only; the pair-difference model has no kink).
std::optional<double> region_gamma0(const coeff::CoefficientGrid& grid) {
    if (grid.family == coeff::Family::pair_difference) return std::nullopt;
    if (!(std::isfinite(grid.q1) && std::isfinite(grid.q2) && grid.q1 > 0.0 &&
          grid.q2 > 0.0))
        return std::nullopt;
    atlas::ModelExponents exps = atlas::exponents(grid.q1, grid.q2);
    if (!(exps.Q > 0.0 && exps.Q < 1.0)) return std::nullopt;
    atlas::RegionId region = atlas::classify(grid.q1, grid.q2);
    switch (region.tag) {
        case atlas::RegionTag::R22_minus:
        case atlas::RegionTag::R23:
        case atlas::RegionTag::R32:
        case atlas::RegionTag::R33:
            return atlas::critical_gamma(exps, region);
        default:
            return std::nullopt;
    }
}

} // namespace

double theory_exponent(const coeff::CoefficientGrid& grid, double gamma,
                       bool* available) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("theory_exponent: gamma must be positive");
    auto unavailable = [&]() {
        if (available) *available = false;
        return kNaN;
    };
    if (available) *available = true;
    if (grid.family == coeff::Family::pair_difference) return 0.5;
    if (!(std::isfinite(grid.q1) && std::isfinite(grid.q2) && grid.q1 > 0.0 &&
          grid.q2 > 0.0))
        return unavailable();
    atlas::ModelExponents exps = atlas::exponents(grid.q1, grid.q2);
    if (!(exps.Q > 0.0 && exps.Q < 1.0)) return unavailable();
    atlas::RegionId region = atlas::classify(grid.q1, grid.q2);
    switch (region.tag) {
        case atlas::RegionTag::R22_minus:
        case atlas::RegionTag::R23:
        case atlas::RegionTag::R32:
        case atlas::RegionTag::R33:
            return atlas::normalization_exponent(exps, region, gamma);
        default:
            return unavailable();
    }
}

SlopeFit variance_scan(const ScanConfig& cfg, double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("variance_scan: gamma must be positive");
    if (!(cfg.point.first > 0.0) || !(cfg.point.second > 0.0))
        throw std::invalid_argument("variance_scan: the point must be positive");
    std::vector<double> lambdas = checked_lambdas(cfg);
    coeff::CoefficientGrid grid = prepared_grid(cfg);

    SlopeFit out;
    out.gamma = gamma;
    out.data.reserve(lambdas.size());
    if (cfg.use_exact_variance) {
        for (double lambda : lambdas)
            out.data.emplace_back(lambda, sim::exact_variance(grid, gamma, lambda, cfg.point));
    } else {
        if (cfg.reps < 2)
            throw std::invalid_argument(
                "variance_scan: Monte Carlo variances need at least two replicates");
        std::vector<sim::VarianceEstimate> est = sim::replicate_variance(
            grid, cfg.innov, gamma, lambdas, cfg.point, cfg.reps, cfg.threads);
        for (const auto& e : est) out.data.emplace_back(e.lambda, e.variance);
    }

    std::vector<double> xs, ys;
    xs.reserve(out.data.size());
    ys.reserve(out.data.size());
    for (auto [lambda, variance] : out.data) {
        if (!(variance > 0.0))
            throw model_error("variance_scan: nonpositive variance at lambda = " +
                              io::format_double(lambda) +
                              "; no power-law slope can be fitted");
        xs.push_back(std::log(lambda));
        ys.push_back(0.5 * std::log(variance));
    }

    LineFit full = fit_line(xs, ys);
    out.H_hat = full.slope;
    out.stderr_ = full.slope_se;
    out.r_squared = full.r_squared;
    out.residuals = full.residuals;

    // Curvature = worst log-variance misfit of the single-slope model.  When
    // the scan straddles the transition the pooled slope is meaningless, so
    // refit on the largest three lambdas (closest to the limit).
    double curvature = 0.0;
    for (double r : full.residuals) curvature = std::max(curvature, 2.0 * std::abs(r));
    if (curvature > cfg.curvature_threshold && xs.size() > 3) {
        std::vector<double> xt(xs.end() - 3, xs.end());
        std::vector<double> yt(ys.end() - 3, ys.end());
        LineFit tail = fit_line(xt, yt);
        out.H_hat = tail.slope;
        out.stderr_ = tail.slope_se;
        out.used_tail_refit = true;
    }

    bool avail = false;
    double theory = theory_exponent(grid, gamma, &avail);
    out.H_theory = theory;
    out.theory_available = avail;
    return out;
}

TransitionReport transition_scan(const ScanConfig& cfg) {
    if (cfg.gamma_grid.empty())
        throw std::invalid_argument("transition_scan: gamma grid is empty");
    std::vector<double> gammas = cfg.gamma_grid;
    std::sort(gammas.begin(), gammas.end());
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!(gammas[i] > 0.0))
            throw std::invalid_argument("transition_scan: gammas must be positive");
        if (i > 0 && gammas[i] == gammas[i - 1])
            throw std::invalid_argument("transition_scan: gammas must be distinct");
    }

    TransitionReport rep;
    rep.entries.reserve(gammas.size());
    for (double gamma : gammas) {
        SlopeFit fit = variance_scan(cfg, gamma);
        TransitionEntry e;
        e.gamma = gamma;
        e.H_hat = fit.H_hat;
        e.H_theory = fit.H_theory;
        e.stderr_ = fit.stderr_;
        e.theory_available = fit.theory_available;
        if (fit.theory_available) {
            e.abs_diff = std::abs(fit.H_hat - fit.H_theory);
            e.flagged = e.abs_diff > 3.0 * fit.stderr_;
        }
        rep.entries.push_back(e);
    }

    if (auto g0 = region_gamma0(prepared_grid(cfg))) rep.gamma0_theory = *g0;

    // Two-segment least squares on (gamma, H_hat) with the breakpoint scanned
    // over grid midpoints that leave >= 3 points per side; the kink estimate
    // is the crossing of the two fitted lines when it falls inside the winning
    // midpoint's cell, otherwise the midpoint itself.
    const std::size_t n = gammas.size();
    if (n >= 6) {
        std::vector<double> hs(n);
        for (std::size_t i = 0; i < n; ++i) hs[i] = rep.entries[i].H_hat;
        double best_sse = std::numeric_limits<double>::infinity();
        double best_kink = kNaN;
        for (std::size_t j = 2; j + 4 <= n; ++j) {
            std::vector<double> xl(gammas.begin(), gammas.begin() + j + 1);
            std::vector<double> yl(hs.begin(), hs.begin() + j + 1);
            std::vector<double> xr(gammas.begin() + j + 1, gammas.end());
            std::vector<double> yr(hs.begin() + j + 1, hs.end());
            LineFit left = fit_line(xl, yl);
            LineFit right = fit_line(xr, yr);
            double sse = 0.0;
            for (double r : left.residuals) sse += r * r;
            for (double r : right.residuals) sse += r * r;
            if (sse < best_sse) {
                best_sse = sse;
                double kink = (gammas[j] + gammas[j + 1]) / 2.0;
                if (left.slope != right.slope) {
                    double cross = (right.intercept - left.intercept) /
                                   (left.slope - right.slope);
                    if (cross > gammas[j] && cross < gammas[j + 1]) kink = cross;
                }
                best_kink = kink;
            }
        }
        rep.detected_kink = best_kink;
    }

    if (std::isfinite(rep.gamma0_theory) && std::isfinite(rep.detected_kink)) {
        std::size_t below = 0, above = 0;
        for (double g : gammas) {
            if (g < rep.gamma0_theory) ++below;
            if (g > rep.gamma0_theory) ++above;
        }
        rep.kink_claimed = below >= 3 && above >= 3;
    }
    return rep;
}

CovCheckReport covariance_check(
    const ScanConfig& cfg, double gamma,
    const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
        point_pairs) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("covariance_check: gamma must be positive");
    if (point_pairs.empty())
        throw std::invalid_argument("covariance_check: no point pairs supplied");
    if (cfg.reps < 2)
        throw std::invalid_argument("covariance_check: at least two replicates needed");
    if (cfg.lambda_grid.empty())
        throw std::invalid_argument("covariance_check: lambda grid is empty");
    for (const auto& pr : point_pairs)
        if (!(pr.first.first > 0.0) || !(pr.first.second > 0.0) ||
            !(pr.second.first > 0.0) || !(pr.second.second > 0.0))
            throw std::invalid_argument("covariance_check: points must be positive");

    coeff::CoefficientGrid grid = prepared_grid(cfg);
    if (grid.family == coeff::Family::pair_difference)
        throw model_error(
            "covariance_check: the pair-difference model sits outside the region "
            "algebra (its decay exponents are infinite); no limit descriptor applies");

    atlas::ModelExponents exps = atlas::exponents(grid.q1, grid.q2);
    atlas::RegionId region = atlas::classify(grid.q1, grid.q2);
    atlas::LimitDescriptor desc = atlas::limit_descriptor(exps, region, gamma);

    CovCheckReport rep;
    rep.gamma = gamma;
    rep.lambda = *std::max_element(cfg.lambda_grid.begin(), cfg.lambda_grid.end());
    if (!(rep.lambda > 0.0))
        throw std::invalid_argument("covariance_check: lambdas must be positive");
    rep.reps = cfg.reps;
    rep.limit_description = desc.description;

    if (desc.hurst_pair) {
        rep.H_gamma = desc.hurst_pair->first + gamma * desc.hurst_pair->second;
    } else if (desc.scale == atlas::ScaleSymbol::V0_kernel) {
        rep.H_gamma = atlas::normalization_exponent(exps, region, gamma);
    } else { // mixed_edge at gamma0 = 1: both edge sheets scale like lambda^{1/2}
        rep.H_gamma = 0.5;
    }

    // Theory covariance per pair, from the descriptor's scale symbol.
    std::optional<limit::SigmaNorms> norms;
    std::optional<limit::EdgeSigmas> edges;
    auto sigma_sq = [&](atlas::ScaleSymbol s) -> double {
        switch (s) {
            case atlas::ScaleSymbol::sigma1:
            case atlas::ScaleSymbol::sigma2:
            case atlas::ScaleSymbol::sigma1_tilde:
            case atlas::ScaleSymbol::sigma2_tilde: {
                if (!norms)
                    norms = limit::sigma_norms(grid.q1, grid.q2,
                                               coeff::family_angular(grid));
                switch (s) {
                    case atlas::ScaleSymbol::sigma1: return norms->sigma1 * norms->sigma1;
                    case atlas::ScaleSymbol::sigma2: return norms->sigma2 * norms->sigma2;
                    case atlas::ScaleSymbol::sigma1_tilde: {
                        if (!norms->sigma1_tilde)
                            throw model_error(
                                "covariance_check: sigma1_tilde is not attributed here");
                        return *norms->sigma1_tilde * *norms->sigma1_tilde;
                    }
                    default: {
                        if (!norms->sigma2_tilde)
                            throw model_error(
                                "covariance_check: sigma2_tilde is not attributed here");
                        return *norms->sigma2_tilde * *norms->sigma2_tilde;
                    }
                }
            }
            case atlas::ScaleSymbol::sigma_edge1:
            case atlas::ScaleSymbol::sigma_edge2: {
                if (!edges) edges = limit::edge_sigmas(grid);
                return s == atlas::ScaleSymbol::sigma_edge1 ? edges->sigma2_edge1
                                                            : edges->sigma2_edge2;
            }
            default:
                throw model_error("covariance_check: unexpected scale symbol");
        }
    };
    auto theory_cov = [&](limit::Point a, limit::Point b) -> double {
        switch (desc.scale) {
            case atlas::ScaleSymbol::sigma1:
            case atlas::ScaleSymbol::sigma2:
            case atlas::ScaleSymbol::sigma1_tilde:
            case atlas::ScaleSymbol::sigma2_tilde: {
                limit::FbsParams p{desc.hurst_pair->first, desc.hurst_pair->second};
                return sigma_sq(desc.scale) * limit::fbs_covariance(p, a, b);
            }
            case atlas::ScaleSymbol::sigma_edge1:
                return sigma_sq(desc.scale) *
                       limit::fbs_covariance({0.5, 0.0}, a, b);
            case atlas::ScaleSymbol::sigma_edge2:
                return sigma_sq(desc.scale) *
                       limit::fbs_covariance({0.0, 0.5}, a, b);
            case atlas::ScaleSymbol::mixed_edge:
                return sigma_sq(atlas::ScaleSymbol::sigma_edge1) *
                           limit::fbs_covariance({0.5, 0.0}, a, b) +
                       sigma_sq(atlas::ScaleSymbol::sigma_edge2) *
                           limit::fbs_covariance({0.0, 0.5}, a, b);
            case atlas::ScaleSymbol::V0_kernel:
                return limit::v0_covariance(grid.q1, grid.q2,
                                            coeff::family_angular(grid), a, b);
        }
        throw model_error("covariance_check: unexpected scale symbol");
    };

    // Distinct evaluation points across all pairs.
    std::vector<std::pair<double, double>> points;
    auto point_index = [&](std::pair<double, double> p) -> std::size_t {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i] == p) return i;
        points.push_back(p);
        return points.size() - 1;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
    pair_idx.reserve(point_pairs.size());
    for (const auto& pr : point_pairs)
        pair_idx.emplace_back(point_index(pr.first), point_index(pr.second));

    double max_x = 0.0, max_y = 0.0;
    for (auto [x, y] : points) {
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    }
    int T1 = static_cast<int>(std::floor(rep.lambda * max_x));
    int T2 = static_cast<int>(std::floor(std::pow(rep.lambda, gamma) * max_y));
    if (T1 < 1 || T2 < 1)
        throw std::invalid_argument(
            "covariance_check: the largest lambda gives an empty rectangle");

    // Normalized samples lambda^{-H(gamma)} S, one replicate per row; the
    // loop writes only its own slot, so the result is thread-count invariant.
    const std::size_t npts = points.size();
    const double norm = std::pow(rep.lambda, -rep.H_gamma);
    std::vector<double> samples(static_cast<std::size_t>(cfg.reps) * npts, 0.0);
    const std::vector<double> lambda_one{rep.lambda};
    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
        sim::FieldSlab slab =
            sim::simulate_field(grid, T1, T2, cfg.innov, static_cast<std::uint64_t>(r));
        sim::PartialSumTable table = sim::partial_sums(slab, lambda_one, gamma, points);
        for (std::size_t k = 0; k < npts; ++k)
            samples[r * npts + k] = norm * table.entries[k].value;
    });

    auto mean_of = [&](std::size_t k) {
        double m = 0.0;
        for (int r = 0; r < cfg.reps; ++r)
            m += samples[static_cast<std::size_t>(r) * npts + k];
        return m / cfg.reps;
    };
    std::vector<double> means(npts), vars(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        means[k] = mean_of(k);
        double s = 0.0;
        for (int r = 0; r < cfg.reps; ++r) {
            double d = samples[static_cast<std::size_t>(r) * npts + k] - means[k];
            s += d * d;
        }
        vars[k] = s / (cfg.reps - 1);
    }

    rep.entries.reserve(point_pairs.size());
    for (std::size_t i = 0; i < point_pairs.size(); ++i) {
        auto [ka, kb] = pair_idx[i];
        double c = 0.0;
        for (int r = 0; r < cfg.reps; ++r)
            c += (samples[static_cast<std::size_t>(r) * npts + ka] - means[ka]) *
                 (samples[static_cast<std::size_t>(r) * npts + kb] - means[kb]);
        c /= (cfg.reps - 1);

        CovCheckEntry e;
        e.p1 = point_pairs[i].first;
        e.p2 = point_pairs[i].second;
        e.empirical = c;
        e.theory = theory_cov(e.p1, e.p2);
        e.se = std::sqrt((vars[ka] * vars[kb] + c * c) /
                         (static_cast<double>(cfg.reps) - 1.0));
        if (e.se > 0.0)
            e.n_se = std::abs(e.empirical - e.theory) / e.se;
        else
            e.n_se = e.empirical == e.theory
                         ? 0.0
                         : std::numeric_limits<double>::infinity();
        e.pass = e.n_se <= 4.0;
        rep.entries.push_back(e);
    }
    return rep;
}

std::uint64_t config_hash(const ScanConfig& cfg) {
    std::ostringstream os;
    os << "latticescale-scan-v1\n";
    os << "family=" << coeff::to_string(cfg.grid.family) << "\n";
    os << "R1=" << cfg.grid.R1 << " R2=" << cfg.grid.R2 << "\n";
    os << "q1=" << io::format_double(cfg.grid.q1)
       << " q2=" << io::format_double(cfg.grid.q2) << "\n";
    os << "params=";
    for (double p : cfg.grid.params) os << io::format_double(p) << ",";
    os << "\n";
    // Strided value samples pin the numeric content without hashing
    // multi-megabyte grids byte by byte.
    const std::size_t total = cfg.grid.values.size();
    const std::size_t stride = std::max<std::size_t>(1, total / 4096);
    os << "values[" << total << "/" << stride << "]=";
    const double* data = cfg.grid.values.data();
    for (std::size_t i = 0; i < total; i += stride) os << io::format_double(data[i]) << ",";
    if (total > 0) os << io::format_double(data[total - 1]);
    os << "\n";
    os << "innov=" << static_cast<int>(cfg.innov.family) << " seed=" << cfg.innov.base_seed
       << "\n";
    os << "gammas=";
    for (double g : cfg.gamma_grid) os << io::format_double(g) << ",";
    os << "\nlambdas=";
    for (double l : cfg.lambda_grid) os << io::format_double(l) << ",";
    os << "\npoint=" << io::format_double(cfg.point.first) << ","
       << io::format_double(cfg.point.second) << "\n";
    os << "reps=" << cfg.reps << " exact=" << cfg.use_exact_variance
       << " zero_sum=" << cfg.enforce_zero_sum
       << " curv=" << io::format_double(cfg.curvature_threshold) << "\n";
    return io::fnv1a64(os.str());
}

namespace {

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

nlohmann::ordered_json config_json(const ScanConfig& cfg) {
    nlohmann::ordered_json j;
    j["family"] = coeff::to_string(cfg.grid.family);
    j["R1"] = cfg.grid.R1;
    j["R2"] = cfg.grid.R2;
    j["q1"] = cfg.grid.q1;
    j["q2"] = cfg.grid.q2;
    j["params"] = cfg.grid.params;
    j["innovation"] = innovation_name(cfg.innov.family);
    j["seed"] = cfg.innov.base_seed;
    j["gamma_grid"] = cfg.gamma_grid;
    j["lambda_grid"] = cfg.lambda_grid;
    j["point"] = {cfg.point.first, cfg.point.second};
    j["reps"] = cfg.reps;
    j["use_exact_variance"] = cfg.use_exact_variance;
    j["enforce_zero_sum"] = cfg.enforce_zero_sum;
    j["curvature_threshold"] = cfg.curvature_threshold;
    return j;
}

nlohmann::ordered_json report_shell(const std::string& kind, const ScanConfig& cfg) {
    nlohmann::ordered_json j;
    j["report"] = kind;
    j["version"] = version_string;
    j["config_hash"] = hash_hex(config_hash(cfg));
    j["seed"] = cfg.innov.base_seed;
    j["config"] = config_json(cfg);
    return j;
}

std::string provenance_comments(const std::string& kind, const ScanConfig& cfg) {
    std::ostringstream os;
    os << "# report," << kind << "\n";
    os << "# version," << version_string << "\n";
    os << "# config_hash," << hash_hex(config_hash(cfg)) << "\n";
    os << "# seed," << cfg.innov.base_seed << "\n";
    return os.str();
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

std::vector<std::string> write_one(const std::string& path, const std::string& body) {
    io::write_text_file(path, body);
    return {path};
}

} // namespace

std::vector<std::string> emit_report(const SlopeFit& fit, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt) {
    if (fmt == ReportFormat::json) {
        nlohmann::ordered_json j = report_shell("variance_scan", cfg);
        j["gamma"] = fit.gamma;
        j["H_hat"] = fit.H_hat;
        j["stderr"] = fit.stderr_;
        j["r_squared"] = fit.r_squared;
        j["H_theory"] = fit.theory_available ? nlohmann::ordered_json(fit.H_theory)
                                             : nlohmann::ordered_json(nullptr);
        j["theory_available"] = fit.theory_available;
        j["used_tail_refit"] = fit.used_tail_refit;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < fit.data.size(); ++i) {
            nlohmann::ordered_json row;
            row["lambda"] = fit.data[i].first;
            row["variance"] = fit.data[i].second;
            row["residual"] = fit.residuals[i];
            rows.push_back(row);
        }
        j["data"] = rows;
        return write_one(out_stem + ".json", j.dump(2) + "\n");
    }
    std::ostringstream os;
    os << provenance_comments("variance_scan", cfg);
    os << "# gamma," << io::format_double(fit.gamma) << "\n";
    os << "# H_hat," << io::format_double(fit.H_hat) << "\n";
    os << "# stderr," << io::format_double(fit.stderr_) << "\n";
    os << "# r_squared," << io::format_double(fit.r_squared) << "\n";
    os << "# H_theory,"
       << (fit.theory_available ? io::format_double(fit.H_theory) : "n/a") << "\n";
    os << "# used_tail_refit," << csv_bool(fit.used_tail_refit) << "\n";
    os << "lambda,variance,residual\n";
    for (std::size_t i = 0; i < fit.data.size(); ++i)
        os << io::format_double(fit.data[i].first) << ","
           << io::format_double(fit.data[i].second) << ","
           << io::format_double(fit.residuals[i]) << "\n";
    return write_one(out_stem + ".csv", os.str());
}

std::vector<std::string> emit_report(const TransitionReport& rep, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt) {
    if (fmt == ReportFormat::json) {
        nlohmann::ordered_json j = report_shell("transition_scan", cfg);
        j["detected_kink"] = std::isfinite(rep.detected_kink)
                                 ? nlohmann::ordered_json(rep.detected_kink)
                                 : nlohmann::ordered_json(nullptr);
        j["gamma0_theory"] = std::isfinite(rep.gamma0_theory)
                                 ? nlohmann::ordered_json(rep.gamma0_theory)
                                 : nlohmann::ordered_json(nullptr);
        j["kink_claimed"] = rep.kink_claimed;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& e : rep.entries) {
            nlohmann::ordered_json row;
            row["gamma"] = e.gamma;
            row["H_hat"] = e.H_hat;
            row["H_theory"] = e.theory_available ? nlohmann::ordered_json(e.H_theory)
                                                 : nlohmann::ordered_json(nullptr);
            row["abs_diff"] = e.theory_available ? nlohmann::ordered_json(e.abs_diff)
                                                 : nlohmann::ordered_json(nullptr);
            row["stderr"] = e.stderr_;
            row["theory_available"] = e.theory_available;
            row["flagged"] = e.flagged;
            rows.push_back(row);
        }
        j["entries"] = rows;
        return write_one(out_stem + ".json", j.dump(2) + "\n");
    }
    std::ostringstream os;
    os << provenance_comments("transition_scan", cfg);
    os << "# detected_kink,"
       << (std::isfinite(rep.detected_kink) ? io::format_double(rep.detected_kink)
                                            : "n/a")
       << "\n";
    os << "# gamma0_theory,"
       << (std::isfinite(rep.gamma0_theory) ? io::format_double(rep.gamma0_theory)
                                            : "n/a")
       << "\n";
    os << "# kink_claimed," << csv_bool(rep.kink_claimed) << "\n";
    os << "gamma,H_hat,H_theory,abs_diff,stderr,theory_available,flagged\n";
    for (const auto& e : rep.entries) {
        os << io::format_double(e.gamma) << "," << io::format_double(e.H_hat) << ",";
        os << (e.theory_available ? io::format_double(e.H_theory) : "n/a") << ",";
        os << (e.theory_available ? io::format_double(e.abs_diff) : "n/a") << ",";
        os << io::format_double(e.stderr_) << "," << csv_bool(e.theory_available) << ","
           << csv_bool(e.flagged) << "\n";
    }
    return write_one(out_stem + ".csv", os.str());
}

std::vector<std::string> emit_report(const CovCheckReport& rep, const ScanConfig& cfg,
                                     const std::string& out_stem, ReportFormat fmt) {
    if (fmt == ReportFormat::json) {
        nlohmann::ordered_json j = report_shell("covariance_check", cfg);
        j["gamma"] = rep.gamma;
        j["lambda"] = rep.lambda;
        j["reps"] = rep.reps;
        j["H_gamma"] = rep.H_gamma;
        j["limit"] = rep.limit_description;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& e : rep.entries) {
            nlohmann::ordered_json row;
            row["p1"] = {e.p1.first, e.p1.second};
            row["p2"] = {e.p2.first, e.p2.second};
            row["empirical"] = e.empirical;
            row["theory"] = e.theory;
            row["se"] = e.se;
            row["n_se"] = e.n_se;
            row["pass"] = e.pass;
            rows.push_back(row);
        }
        j["entries"] = rows;
        return write_one(out_stem + ".json", j.dump(2) + "\n");
    }
    std::ostringstream os;
    os << provenance_comments("covariance_check", cfg);
    os << "# gamma," << io::format_double(rep.gamma) << "\n";
    os << "# lambda," << io::format_double(rep.lambda) << "\n";
    os << "# reps," << rep.reps << "\n";
    os << "# H_gamma," << io::format_double(rep.H_gamma) << "\n";
    os << "# limit," << rep.limit_description << "\n";
    os << "x1,y1,x2,y2,empirical,theory,se,n_se,pass\n";
    for (const auto& e : rep.entries) {
        os << io::format_double(e.p1.first) << "," << io::format_double(e.p1.second)
           << "," << io::format_double(e.p2.first) << ","
           << io::format_double(e.p2.second) << "," << io::format_double(e.empirical)
           << "," << io::format_double(e.theory) << "," << io::format_double(e.se)
           << "," << io::format_double(e.n_se) << "," << csv_bool(e.pass) << "\n";
    }
    return write_one(out_stem + ".csv", os.str());
}

} // namespace lsc::expt
