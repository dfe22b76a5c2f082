// lsc — command-line front end for the latticescale library.
//
// Commands: classify, atlas, coeffs, simulate, scan-variance,
// scan-transition, edge-sigma, cov-check.
// Exit codes: 0 success, 2 validation error, 3 model out of scope
// (boundary / open case), 4 resource limit.

#include "latticescale/coeff_families.hpp"
#include "latticescale/errors.hpp"
#include "latticescale/experiments.hpp"
#include "latticescale/io.hpp"
#include "latticescale/lattice_sim.hpp"
#include "latticescale/limit_calc.hpp"
#include "latticescale/region_atlas.hpp"
#include "latticescale/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace atlas = lsc::atlas;
namespace coeff = lsc::coeff;
namespace expt = lsc::expt;
namespace io = lsc::io;
namespace limit = lsc::limit;
namespace sim = lsc::sim;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

bool is_set(double v) { return !std::isnan(v); }

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::string format = "csv";
    std::size_t memory_budget = std::size_t{2} * 1024 * 1024 * 1024;
};

expt::ReportFormat report_format(const GlobalOpts& g) {
    return g.format == "json" ? expt::ReportFormat::json : expt::ReportFormat::csv;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    const char* env = std::getenv("LATTICESCALE_OUT");
    std::string dir = (env && *env) ? env : g.out_dir;
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------- model opts

struct ModelOpts {
    std::string family;
    double d = kUnset, theta = kUnset, d1 = kUnset, d2 = kUnset;
    double q1 = kUnset, q2 = kUnset;
    double L0 = 1.0;
    int R = 64, R1 = 0, R2 = 0; // R1/R2 = 0 means "use --R"
    std::string grid_file;
};

void add_model_options(CLI::App* sub, ModelOpts& m) {
    sub->add_option("--family", m.family,
                    "coefficient family: isotropic | heat | separable | "
                    "pair-difference | synthetic");
    sub->add_option("--d", m.d, "fractional order d (isotropic/heat)");
    sub->add_option("--theta", m.theta, "laziness parameter theta (heat)");
    sub->add_option("--d1", m.d1, "horizontal fractional order (separable)");
    sub->add_option("--d2", m.d2, "vertical fractional order (separable)");
    sub->add_option("--q1", m.q1, "horizontal decay exponent (synthetic)");
    sub->add_option("--q2", m.q2, "vertical decay exponent (synthetic)");
    sub->add_option("--L0", m.L0, "constant angular value (synthetic)")->capture_default_str();
    sub->add_option("--R", m.R, "truncation radius (both axes unless overridden)")
                    ->capture_default_str();
    sub->add_option("--R1", m.R1, "horizontal truncation radius");
    sub->add_option("--R2", m.R2, "vertical truncation radius");
    sub->add_option("--grid-file", m.grid_file,
                    "load a stored coefficient grid instead of constructing one");
}

void require_param(double v, const std::string& name, const std::string& family) {
    if (!is_set(v))
        throw std::invalid_argument("the " + family + " family needs " + name);
}

coeff::CoefficientGrid build_grid(const ModelOpts& m) {
    if (!m.grid_file.empty()) return io::read_grid(m.grid_file);
    if (m.family.empty())
        throw std::invalid_argument("either --family or --grid-file is required");
    coeff::Family fam = coeff::family_from_string(m.family);
    int R1 = m.R1 > 0 ? m.R1 : m.R;
    int R2 = m.R2 > 0 ? m.R2 : m.R;
    switch (fam) {
        case coeff::Family::isotropic_frac_laplacian:
            require_param(m.d, "--d", "isotropic");
            return coeff::isotropic_coeffs(m.d, R1);
        case coeff::Family::heat_operator:
            require_param(m.d, "--d", "heat");
            require_param(m.theta, "--theta", "heat");
            return coeff::heat_coeffs(m.d, m.theta, R1);
        case coeff::Family::separable:
            require_param(m.d1, "--d1", "separable");
            require_param(m.d2, "--d2", "separable");
            return coeff::separable_coeffs(m.d1, m.d2, R1, R2);
        case coeff::Family::pair_difference:
            return coeff::pair_difference_coeffs();
        case coeff::Family::synthetic:
            require_param(m.q1, "--q1", "synthetic");
            require_param(m.q2, "--q2", "synthetic");
            return coeff::synthetic_coeffs(m.q1, m.q2,
                                           lsc::AngularFunction::constant(m.L0), R1, R2);
    }
    throw std::invalid_argument("unknown family: " + m.family);
}

// ------------------------------------------------------------------ classify

struct ClassifyOpts {
    ModelOpts model;
    double tol = 1e-9;
};

std::pair<double, double> classify_q(const ClassifyOpts& c) {
    const ModelOpts& m = c.model;
    if (!m.grid_file.empty()) {
        coeff::CoefficientGrid grid = io::read_grid(m.grid_file);
        return {grid.q1, grid.q2};
    }
    if (is_set(m.q1) || is_set(m.q2)) {
        if (!is_set(m.q1) || !is_set(m.q2))
            throw std::invalid_argument("classify: --q1 and --q2 must be given together");
        return {m.q1, m.q2};
    }
    if (m.family.empty())
        throw std::invalid_argument("classify: give --q1/--q2 or --family with its "
                                    "fractional orders");
    switch (coeff::family_from_string(m.family)) {
        case coeff::Family::isotropic_frac_laplacian:
            require_param(m.d, "--d", "isotropic");
            return {2.0 * (1.0 - m.d), 2.0 * (1.0 - m.d)};
        case coeff::Family::heat_operator:
            require_param(m.d, "--d", "heat");
            return {1.5 - m.d, 3.0 - 2.0 * m.d};
        case coeff::Family::separable:
            require_param(m.d1, "--d1", "separable");
            require_param(m.d2, "--d2", "separable");
            return {1.0 - m.d1, 1.0 - m.d2};
        case coeff::Family::pair_difference:
            return {std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
        case coeff::Family::synthetic:
            require_param(m.q1, "--q1", "synthetic");
            require_param(m.q2, "--q2", "synthetic");
            return {m.q1, m.q2};
    }
    throw std::invalid_argument("unknown family: " + m.family);
}

void cmd_classify(const GlobalOpts& g, const ClassifyOpts& c) {
    auto [q1, q2] = classify_q(c);
    atlas::ModelExponents e = atlas::exponents(q1, q2);
    atlas::RegionId region = atlas::classify(q1, q2, c.tol);
    if (region.tag == atlas::RegionTag::boundary)
        throw lsc::model_error("classify: parameters lie on a region boundary (" +
                               region.boundary_detail +
                               "); exponent comparisons are not stable there");

    auto line = [](const std::string& k, const std::string& v) {
        std::cout << "  " << k;
        for (std::size_t i = k.size(); i < 14; ++i) std::cout << ' ';
        std::cout << v << "\n";
    };
    auto num = [](double v) { return io::format_double(v); };

    std::cout << "region " << atlas::to_string(region.tag) << "\n";
    line("q1, q2", num(e.q1) + ", " + num(e.q2));
    line("Q", num(e.Q));
    line("H1, H2", num(e.H1) + ", " + num(e.H2));
    line("H1~, H2~", num(e.H1_tilde) + ", " + num(e.H2_tilde));
    line("Q_edge", num(e.Q_edge1) + ", " + num(e.Q_edge2));
    line("Q_tilde", num(e.Q_tilde1) + ", " + num(e.Q_tilde2));

    double g0 = atlas::critical_gamma(e, region);
    line("gamma0", num(g0));

    nlohmann::ordered_json j;
    j["version"] = lsc::version_string;
    j["region"] = atlas::to_string(region.tag);
    j["q1"] = e.q1;
    j["q2"] = e.q2;
    j["Q"] = e.Q;
    j["H1"] = e.H1;
    j["H2"] = e.H2;
    j["H1_tilde"] = e.H1_tilde;
    j["H2_tilde"] = e.H2_tilde;
    j["Q_edge1"] = e.Q_edge1;
    j["Q_edge2"] = e.Q_edge2;
    j["Q_tilde1"] = e.Q_tilde1;
    j["Q_tilde2"] = e.Q_tilde2;
    j["gamma0"] = g0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();

    std::cout << "limits at representative gamma:\n";
    for (double gamma : {0.5 * g0, g0, 2.0 * g0}) {
        nlohmann::ordered_json row;
        row["gamma"] = gamma;
        std::cout << "  gamma = " << num(gamma) << ": ";
        try {
            atlas::LimitDescriptor d = atlas::limit_descriptor(e, region, gamma);
            std::cout << d.description;
            row["side"] = atlas::to_string(d.side);
            row["scale"] = atlas::to_string(d.scale);
            row["description"] = d.description;
            if (d.hurst_pair)
                row["hurst"] = {d.hurst_pair->first, d.hurst_pair->second};
        } catch (const lsc::model_error& err) {
            std::cout << "open case: " << err.what();
            row["open"] = err.what();
        }
        try {
            double H = atlas::normalization_exponent(e, region, gamma);
            std::cout << "  [H(gamma) = " << num(H) << "]";
            row["H"] = H;
        } catch (const lsc::model_error&) {
            // LRD regions state no closed exponent; the descriptor already
            // carries the limit identity.
        }
        std::cout << "\n";
        rows.push_back(row);
    }
    j["limits"] = rows;

    std::string path = out_path(g, "classify.json");
    io::write_text_file(path, j.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
}

// --------------------------------------------------------------------- atlas

struct AtlasOpts {
    int grid_size = 200;
    double inv_min = 0.0, inv_max = 1.0;
    double tol = 1e-9;
};

void cmd_atlas(const GlobalOpts& g, const AtlasOpts& a) {
    if (a.grid_size < 1)
        throw std::invalid_argument("atlas: grid size must be >= 1");
    if (!(a.inv_min >= 0.0 && a.inv_max <= 1.0 && a.inv_min < a.inv_max))
        throw std::invalid_argument("atlas: need 0 <= inv-min < inv-max <= 1");

    std::vector<std::pair<double, double>> pts;
    pts.reserve(static_cast<std::size_t>(a.grid_size) * a.grid_size);
    double step = (a.inv_max - a.inv_min) / a.grid_size;
    for (int i = 0; i < a.grid_size; ++i)
        for (int j = 0; j < a.grid_size; ++j)
            pts.emplace_back(a.inv_min + (i + 0.5) * step, a.inv_min + (j + 0.5) * step);
    std::vector<atlas::PhasePoint> diagram = atlas::phase_diagram(pts, a.tol);

    std::ostringstream meta;
    meta << "grid_size=" << a.grid_size << " inv_min=" << io::format_double(a.inv_min)
         << " inv_max=" << io::format_double(a.inv_max)
         << " tol=" << io::format_double(a.tol);
    std::string hash;
    {
        std::ostringstream h;
        h << std::hex;
        h.width(16);
        h.fill('0');
        h << io::fnv1a64(meta.str());
        hash = h.str();
    }

    std::string path;
    if (report_format(g) == expt::ReportFormat::json) {
        nlohmann::ordered_json j;
        j["report"] = "atlas";
        j["version"] = lsc::version_string;
        j["config_hash"] = hash;
        j["grid_size"] = a.grid_size;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& p : diagram) {
            nlohmann::ordered_json row;
            row["inv_q1"] = p.inv_q1;
            row["inv_q2"] = p.inv_q2;
            row["region"] = atlas::to_string(p.region.tag);
            row["Q"] = p.exps.Q;
            row["Q_edge1"] = p.exps.Q_edge1;
            row["Q_edge2"] = p.exps.Q_edge2;
            row["Q_tilde1"] = p.exps.Q_tilde1;
            row["Q_tilde2"] = p.exps.Q_tilde2;
            rows.push_back(row);
        }
        j["points"] = rows;
        path = out_path(g, "atlas.json");
        io::write_text_file(path, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "# report,atlas\n# version," << lsc::version_string << "\n";
        os << "# config_hash," << hash << "\n";
        os << "inv_q1,inv_q2,region,Q,Q_edge1,Q_edge2,Q_tilde1,Q_tilde2\n";
        for (const auto& p : diagram) {
            os << io::format_double(p.inv_q1) << "," << io::format_double(p.inv_q2)
               << "," << atlas::to_string(p.region.tag) << ","
               << io::format_double(p.exps.Q) << ","
               << io::format_double(p.exps.Q_edge1) << ","
               << io::format_double(p.exps.Q_edge2) << ","
               << io::format_double(p.exps.Q_tilde1) << ","
               << io::format_double(p.exps.Q_tilde2) << "\n";
        }
        path = out_path(g, "atlas.csv");
        io::write_text_file(path, os.str());
    }
    std::cout << "classified " << diagram.size() << " points\n";
    std::cout << "wrote " << path << "\n";
}

// -------------------------------------------------------------------- coeffs

struct CoeffsOpts {
    ModelOpts model;
    bool enforce_zero_sum = false;
};

void cmd_coeffs(const GlobalOpts& g, const CoeffsOpts& c) {
    coeff::CoefficientGrid grid = build_grid(c.model);
    if (c.enforce_zero_sum) grid = coeff::with_zero_sum_enforced(grid);
    std::string path = out_path(g, "coeffs.bin");
    io::write_grid(path, grid);
    std::cout << "family " << coeff::to_string(grid.family) << ", window ["
              << -grid.R1 << "," << grid.R1 << "] x [" << -grid.R2 << "," << grid.R2
              << "]\n";
    std::cout << "q1 = " << io::format_double(grid.q1)
              << ", q2 = " << io::format_double(grid.q2) << "\n";
    std::cout << "a(0,0) = " << io::format_double(grid.at(0, 0)) << "\n";
    std::cout << "zero-sum residual = " << io::format_double(grid.zero_sum_residual)
              << "\n";
    if (std::isfinite(grid.q1) && std::isfinite(grid.q2)) {
        coeff::RhoEnvelope env = coeff::fit_envelope_constant(grid);
        std::cout << "envelope constant C = " << io::format_double(env.C) << "\n";
    }
    std::cout << "wrote " << path << "\n";
}

// ------------------------------------------------------------------ simulate

struct SimulateOpts {
    ModelOpts model;
    int T1 = 0, T2 = 0;
    std::uint64_t replicate = 0;
    std::string innovation = "gaussian";
    bool force_direct = false;
    bool enforce_zero_sum = false;
};

lsc::rng::InnovationFamily parse_innovation(const std::string& name) {
    if (name == "gaussian") return lsc::rng::InnovationFamily::gaussian;
    if (name == "rademacher") return lsc::rng::InnovationFamily::rademacher;
    if (name == "centered-uniform" || name == "centered_uniform")
        return lsc::rng::InnovationFamily::centered_uniform;
    throw std::invalid_argument("unknown innovation family: " + name);
}

void cmd_simulate(const GlobalOpts& g, const SimulateOpts& s) {
    coeff::CoefficientGrid grid = build_grid(s.model);
    if (s.enforce_zero_sum) grid = coeff::with_zero_sum_enforced(grid);
    sim::InnovationSpec innov;
    innov.family = parse_innovation(s.innovation);
    innov.base_seed = g.seed;
    sim::SimOptions opt;
    opt.memory_budget_bytes = g.memory_budget;
    opt.force_direct = s.force_direct;
    sim::FieldSlab slab = sim::simulate_field(grid, s.T1, s.T2, innov, s.replicate, opt);

    double mean = 0.0;
    for (std::size_t i = 0; i < slab.values.size(); ++i) mean += slab.values.data()[i];
    mean /= static_cast<double>(slab.values.size());

    std::string path = out_path(g, "slab.bin");
    io::write_slab(path, slab);
    std::cout << "simulated " << s.T1 << " x " << s.T2 << " field, replicate "
              << s.replicate << ", seed " << g.seed << "\n";
    std::cout << "sample mean = " << io::format_double(mean) << "\n";
    std::cout << "wrote " << path << "\n";
}

// --------------------------------------------------------- scan configuration

struct ScanOpts {
    ModelOpts model;
    std::vector<double> lambdas;
    double x = 1.0, y = 1.0;
    int reps = 200;
    bool mc = false;
    bool exact = false;
    bool no_zero_sum = false;
    double curvature_threshold = 0.02;
    std::string innovation = "gaussian";
};

void add_scan_options(CLI::App* sub, ScanOpts& s) {
    add_model_options(sub, s.model);
    sub->add_option("--lambdas", s.lambdas, "scale grid, e.g. 64,128,256,512")
        ->delimiter(',')
        ->required();
    sub->add_option("--x", s.x, "rectangle coordinate x")->capture_default_str();
    sub->add_option("--y", s.y, "rectangle coordinate y")->capture_default_str();
    sub->add_option("--reps", s.reps, "Monte Carlo replicates")->capture_default_str();
    sub->add_flag("--mc", s.mc, "Monte Carlo variances instead of exact G-sums");
    sub->add_flag("--exact", s.exact, "exact G-sum variances (the default)");
    sub->add_flag("--no-zero-sum", s.no_zero_sum,
                  "scan the raw truncated grid without the zero-sum adjustment");
    sub->add_option("--curvature-threshold", s.curvature_threshold,
                    "log-variance misfit that triggers the tail refit")->capture_default_str();
    sub->add_option("--innovation", s.innovation,
                    "gaussian | rademacher | centered-uniform")->capture_default_str();
}

expt::ScanConfig scan_config(const GlobalOpts& g, const ScanOpts& s) {
    if (s.mc && s.exact)
        throw std::invalid_argument("--mc and --exact are mutually exclusive");
    expt::ScanConfig cfg;
    cfg.grid = build_grid(s.model);
    cfg.innov.family = parse_innovation(s.innovation);
    cfg.innov.base_seed = g.seed;
    cfg.lambda_grid = s.lambdas;
    cfg.point = {s.x, s.y};
    cfg.reps = s.reps;
    cfg.use_exact_variance = !s.mc;
    cfg.enforce_zero_sum = !s.no_zero_sum;
    cfg.threads = g.threads;
    cfg.curvature_threshold = s.curvature_threshold;
    return cfg;
}

// ------------------------------------------------------------- scan-variance

struct ScanVarianceOpts {
    ScanOpts scan;
    double gamma = kUnset;
};

void cmd_scan_variance(const GlobalOpts& g, const ScanVarianceOpts& o) {
    expt::ScanConfig cfg = scan_config(g, o.scan);
    cfg.gamma_grid = {o.gamma};
    expt::SlopeFit fit = expt::variance_scan(cfg, o.gamma);
    std::cout << "gamma = " << io::format_double(fit.gamma)
              << ": H_hat = " << io::format_double(fit.H_hat)
              << " (stderr " << io::format_double(fit.stderr_) << ", r^2 "
              << io::format_double(fit.r_squared) << ")";
    if (fit.theory_available)
        std::cout << ", H_theory = " << io::format_double(fit.H_theory);
    if (fit.used_tail_refit) std::cout << ", tail refit";
    std::cout << "\n";
    for (const auto& [lambda, variance] : fit.data)
        std::cout << "  lambda " << io::format_double(lambda) << ": Var = "
                  << io::format_double(variance) << "\n";
    for (const std::string& f :
         expt::emit_report(fit, cfg, out_path(g, "scan_variance"), report_format(g)))
        std::cout << "wrote " << f << "\n";
}

// ----------------------------------------------------------- scan-transition

struct ScanTransitionOpts {
    ScanOpts scan;
    std::vector<double> gammas;
    double gamma_min = 0.25, gamma_max = 2.0;
    int gamma_count = 8;
};

void cmd_scan_transition(const GlobalOpts& g, const ScanTransitionOpts& o) {
    expt::ScanConfig cfg = scan_config(g, o.scan);
    if (!o.gammas.empty()) {
        cfg.gamma_grid = o.gammas;
    } else {
        if (o.gamma_count < 2)
            throw std::invalid_argument("scan-transition: gamma-count must be >= 2");
        if (!(o.gamma_min > 0.0) || !(o.gamma_max > o.gamma_min))
            throw std::invalid_argument(
                "scan-transition: need 0 < gamma-min < gamma-max");
        for (int i = 0; i < o.gamma_count; ++i)
            cfg.gamma_grid.push_back(o.gamma_min + (o.gamma_max - o.gamma_min) * i /
                                                       (o.gamma_count - 1));
    }
    expt::TransitionReport rep = expt::transition_scan(cfg);
    for (const auto& e : rep.entries) {
        std::cout << "gamma " << io::format_double(e.gamma) << ": H_hat "
                  << io::format_double(e.H_hat);
        if (e.theory_available)
            std::cout << ", theory " << io::format_double(e.H_theory) << ", |diff| "
                      << io::format_double(e.abs_diff) << (e.flagged ? " FLAG" : "");
        std::cout << "\n";
    }
    if (std::isfinite(rep.detected_kink))
        std::cout << "detected kink at gamma = "
                  << io::format_double(rep.detected_kink) << "\n";
    if (std::isfinite(rep.gamma0_theory))
        std::cout << "theory gamma0 = " << io::format_double(rep.gamma0_theory)
                  << (rep.kink_claimed ? " (kink claimed)" : " (grid too sparse to claim)")
                  << "\n";
    for (const std::string& f :
         expt::emit_report(rep, cfg, out_path(g, "scan_transition"), report_format(g)))
        std::cout << "wrote " << f << "\n";
}

// ---------------------------------------------------------------- edge-sigma

struct EdgeSigmaOpts {
    ModelOpts model;
    double identity_lambda = 0.0; // 0 disables the boundary-identity check
    double identity_delta = 0.25;
    double x = 1.0, y = 1.0;
};

void cmd_edge_sigma(const GlobalOpts& g, const EdgeSigmaOpts& o) {
    coeff::CoefficientGrid grid = build_grid(o.model);
    limit::EdgeSigmas es = limit::edge_sigmas(grid);
    std::cout << "sigma2_edge1 = " << io::format_double(es.sigma2_edge1)
              << (es.convergent1 ? "" : "  [series divergent: Q_edge2 >= 1]") << "\n";
    std::cout << "sigma2_edge2 = " << io::format_double(es.sigma2_edge2)
              << (es.convergent2 ? "" : "  [series divergent: Q_edge1 >= 1]") << "\n";
    std::cout << "truncation bound = " << io::format_double(es.truncation_bound)
              << "\n";

    nlohmann::ordered_json j;
    j["report"] = "edge_sigma";
    j["version"] = lsc::version_string;
    {
        expt::ScanConfig hash_cfg;
        hash_cfg.grid = grid;
        std::ostringstream h;
        h << std::hex;
        h.width(16);
        h.fill('0');
        h << expt::config_hash(hash_cfg);
        j["config_hash"] = h.str();
    }
    j["family"] = coeff::to_string(grid.family);
    j["sigma2_edge1"] = es.sigma2_edge1;
    j["sigma2_edge2"] = es.sigma2_edge2;
    j["truncation_bound"] = es.truncation_bound;
    j["convergent1"] = es.convergent1;
    j["convergent2"] = es.convergent2;

    if (o.identity_lambda > 0.0) {
        double resid = limit::boundary_sum_identity_check(grid, o.x, o.y,
                                                          o.identity_lambda,
                                                          o.identity_delta);
        std::cout << "boundary identity residual at lambda = "
                  << io::format_double(o.identity_lambda) << ": "
                  << io::format_double(resid) << "\n";
        j["identity_lambda"] = o.identity_lambda;
        j["identity_delta"] = o.identity_delta;
        j["identity_residual"] = resid;
    }

    std::string path;
    if (report_format(g) == expt::ReportFormat::json) {
        path = out_path(g, "edge_sigma.json");
        io::write_text_file(path, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "# report,edge_sigma\n# version," << lsc::version_string << "\n";
        os << "# config_hash," << j["config_hash"].get<std::string>() << "\n";
        os << "family,sigma2_edge1,sigma2_edge2,truncation_bound,convergent1,"
              "convergent2\n";
        os << coeff::to_string(grid.family) << ","
           << io::format_double(es.sigma2_edge1) << ","
           << io::format_double(es.sigma2_edge2) << ","
           << io::format_double(es.truncation_bound) << ","
           << (es.convergent1 ? "true" : "false") << ","
           << (es.convergent2 ? "true" : "false") << "\n";
        path = out_path(g, "edge_sigma.csv");
        io::write_text_file(path, os.str());
    }
    std::cout << "wrote " << path << "\n";
}

// ----------------------------------------------------------------- cov-check

struct CovCheckOpts {
    ScanOpts scan;
    double gamma = kUnset;
    double lambda = kUnset;
    std::string pairs = "1,1,1,1;1,1,0.5,1;1,1,1,0.5;0.5,1,1,0.5";
};

std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>
parse_pairs(const std::string& text) {
    std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>> out;
    std::istringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        if (group.empty()) continue;
        std::istringstream fields(group);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(fields, cell, ',')) {
            std::size_t used = 0;
            double v = std::stod(cell, &used);
            if (used != cell.size())
                throw std::invalid_argument("cov-check: bad number in --pairs: " + cell);
            vals.push_back(v);
        }
        if (vals.size() != 4)
            throw std::invalid_argument(
                "cov-check: each --pairs group needs exactly four numbers "
                "x1,y1,x2,y2 (got '" + group + "')");
        out.push_back({{vals[0], vals[1]}, {vals[2], vals[3]}});
    }
    if (out.empty()) throw std::invalid_argument("cov-check: --pairs is empty");
    return out;
}

void cmd_cov_check(const GlobalOpts& g, const CovCheckOpts& o) {
    ScanOpts scan = o.scan;
    expt::ScanConfig cfg = scan_config(g, scan);
    cfg.gamma_grid = {o.gamma};
    cfg.lambda_grid = {o.lambda};
    auto pairs = parse_pairs(o.pairs);
    expt::CovCheckReport rep = expt::covariance_check(cfg, o.gamma, pairs);

    std::cout << "limit: " << rep.limit_description << "\n";
    std::cout << "normalization lambda^-H with H = " << io::format_double(rep.H_gamma)
              << ", lambda = " << io::format_double(rep.lambda) << ", reps "
              << rep.reps << "\n";
    int passed = 0;
    for (const auto& e : rep.entries) {
        passed += e.pass ? 1 : 0;
        std::cout << "  Cov((" << io::format_double(e.p1.first) << ","
                  << io::format_double(e.p1.second) << "),("
                  << io::format_double(e.p2.first) << ","
                  << io::format_double(e.p2.second)
                  << ")): emp = " << io::format_double(e.empirical)
                  << ", theory = " << io::format_double(e.theory) << ", n_se = "
                  << io::format_double(e.n_se) << (e.pass ? " ok" : " MISS") << "\n";
    }
    std::cout << passed << "/" << rep.entries.size() << " pairs within 4 SE\n";
    for (const std::string& f :
         expt::emit_report(rep, cfg, out_path(g, "cov_check"), report_format(g)))
        std::cout << "wrote " << f << "\n";
}

// -------------------------------------------------------------- JSON config

std::string json_scalar_to_token(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return io::format_double(v.get<double>());
    throw std::invalid_argument("config: values must be scalars or flat arrays");
}

// Translate a flat JSON object {option: value} into --option=value tokens
// inserted after the subcommand, skipping keys the command line already set
// (explicit flags win).  Unknown keys are rejected.
std::vector<std::string> apply_config(const CLI::App& app,
                                      const std::vector<std::string>& args,
                                      const std::string& config_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_text_file(config_path));
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument("config: cannot load " + config_path + ": " +
                                    e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("config: top level must be a JSON object");

    std::size_t sub_pos = args.size();
    const CLI::App* sub = nullptr;
    for (std::size_t i = 0; i < args.size(); ++i) {
        for (const CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; })) {
            if (args[i] == s->get_name()) {
                sub_pos = i;
                sub = s;
                break;
            }
        }
        if (sub) break;
    }
    if (!sub)
        throw std::invalid_argument("config: a command must be named on the command "
                                    "line when --config is used");

    std::vector<std::string> extra;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string name = "--" + it.key();
        const CLI::Option* opt = sub->get_option_no_throw(name);
        if (!opt) opt = app.get_option_no_throw(name);
        if (!opt)
            throw std::invalid_argument("config: unknown key '" + it.key() +
                                        "' for command '" + sub->get_name() + "'");
        bool on_cli = false;
        for (const std::string& a : args)
            if (a == name || a.rfind(name + "=", 0) == 0) on_cli = true;
        if (on_cli) continue;

        std::string value;
        if (it.value().is_array()) {
            for (const auto& elem : it.value()) {
                if (!value.empty()) value += ",";
                value += json_scalar_to_token(elem);
            }
        } else {
            value = json_scalar_to_token(it.value());
        }
        extra.push_back(name + "=" + value);
    }

    std::vector<std::string> out(args.begin(), args.begin() + sub_pos + 1);
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), args.begin() + sub_pos + 1, args.end());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latticescale: scaling transitions of negatively dependent "
                 "linear random fields on the lattice"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file (keys = long flags)");
    app.add_option("--seed", g.seed, "base seed for innovations")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (never affects results)")
                   ->capture_default_str();
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", g.format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--memory-budget", g.memory_budget,
                   "simulation memory budget in bytes")->capture_default_str();

    ClassifyOpts classify_opts;
    CLI::App* sub_classify =
        app.add_subcommand("classify", "classify (q1, q2) and print the region, "
                                       "exponents, and representative limits");
    sub_classify->fallthrough();
    add_model_options(sub_classify, classify_opts.model);
    sub_classify->add_option("--tol", classify_opts.tol, "boundary tolerance")->capture_default_str();
    sub_classify->callback([&]() { cmd_classify(g, classify_opts); });

    AtlasOpts atlas_opts;
    CLI::App* sub_atlas =
        app.add_subcommand("atlas", "phase diagram over a (1/q1, 1/q2) grid");
    sub_atlas->fallthrough();
    sub_atlas->add_option("--grid-size", atlas_opts.grid_size, "points per axis")->capture_default_str();
    sub_atlas->add_option("--inv-min", atlas_opts.inv_min,
                          "lower bound in (1/q1, 1/q2)")->capture_default_str();
    sub_atlas->add_option("--inv-max", atlas_opts.inv_max,
                          "upper bound in (1/q1, 1/q2)")->capture_default_str();
    sub_atlas->add_option("--tol", atlas_opts.tol, "boundary tolerance")->capture_default_str();
    sub_atlas->callback([&]() { cmd_atlas(g, atlas_opts); });

    CoeffsOpts coeffs_opts;
    CLI::App* sub_coeffs =
        app.add_subcommand("coeffs", "construct a coefficient grid and store it");
    sub_coeffs->fallthrough();
    add_model_options(sub_coeffs, coeffs_opts.model);
    sub_coeffs->add_flag("--enforce-zero-sum", coeffs_opts.enforce_zero_sum,
                         "adjust the origin so the grid sums to zero");
    sub_coeffs->callback([&]() { cmd_coeffs(g, coeffs_opts); });

    SimulateOpts sim_opts;
    CLI::App* sub_sim = app.add_subcommand("simulate", "simulate one field replicate");
    sub_sim->fallthrough();
    add_model_options(sub_sim, sim_opts.model);
    sub_sim->add_option("--T1", sim_opts.T1, "window height")->required();
    sub_sim->add_option("--T2", sim_opts.T2, "window width")->required();
    sub_sim->add_option("--replicate", sim_opts.replicate, "replicate index")->capture_default_str();
    sub_sim->add_option("--innovation", sim_opts.innovation,
                        "gaussian | rademacher | centered-uniform")->capture_default_str();
    sub_sim->add_flag("--force-direct", sim_opts.force_direct,
                      "use the direct convolution reference path");
    sub_sim->add_flag("--enforce-zero-sum", sim_opts.enforce_zero_sum,
                      "adjust the origin so the grid sums to zero");
    sub_sim->callback([&]() { cmd_simulate(g, sim_opts); });

    ScanVarianceOpts sv_opts;
    CLI::App* sub_sv = app.add_subcommand(
        "scan-variance", "fit H from Var S over a lambda grid at fixed gamma");
    sub_sv->fallthrough();
    add_scan_options(sub_sv, sv_opts.scan);
    sub_sv->add_option("--gamma", sv_opts.gamma, "aspect exponent gamma")->required();
    sub_sv->callback([&]() { cmd_scan_variance(g, sv_opts); });

    ScanTransitionOpts st_opts;
    CLI::App* sub_st = app.add_subcommand(
        "scan-transition", "scan gamma, fit H(gamma), and locate the kink");
    sub_st->fallthrough();
    add_scan_options(sub_st, st_opts.scan);
    sub_st->add_option("--gammas", st_opts.gammas, "explicit gamma grid")
        ->delimiter(',');
    sub_st->add_option("--gamma-min", st_opts.gamma_min, "gamma grid start")->capture_default_str();
    sub_st->add_option("--gamma-max", st_opts.gamma_max, "gamma grid end")->capture_default_str();
    sub_st->add_option("--gamma-count", st_opts.gamma_count, "gamma grid size")->capture_default_str();
    sub_st->callback([&]() { cmd_scan_transition(g, st_opts); });

    EdgeSigmaOpts es_opts;
    CLI::App* sub_es = app.add_subcommand(
        "edge-sigma", "edge variance coefficients of a coefficient grid");
    sub_es->fallthrough();
    add_model_options(sub_es, es_opts.model);
    sub_es->add_option("--identity-lambda", es_opts.identity_lambda,
                       "also run the gamma = 1 boundary-sum identity check at this "
                       "lambda (0 = off)")
                       ->capture_default_str();
    sub_es->add_option("--identity-delta", es_opts.identity_delta,
                       "boundary band width as a fraction of lambda")->capture_default_str();
    sub_es->add_option("--x", es_opts.x, "rectangle coordinate x")->capture_default_str();
    sub_es->add_option("--y", es_opts.y, "rectangle coordinate y")->capture_default_str();
    sub_es->callback([&]() { cmd_edge_sigma(g, es_opts); });

    CovCheckOpts cc_opts;
    cc_opts.scan.reps = 400; // covariance checks need more replicates than scans
    CLI::App* sub_cc = app.add_subcommand(
        "cov-check", "empirical vs theoretical limit covariance at the largest lambda");
    sub_cc->fallthrough();
    add_model_options(sub_cc, cc_opts.scan.model);
    sub_cc->add_option("--reps", cc_opts.scan.reps, "Monte Carlo replicates")->capture_default_str();
    sub_cc->add_option("--innovation", cc_opts.scan.innovation,
                       "gaussian | rademacher | centered-uniform")->capture_default_str();
    sub_cc->add_flag("--no-zero-sum", cc_opts.scan.no_zero_sum,
                     "use the raw truncated grid without the zero-sum adjustment");
    sub_cc->add_option("--gamma", cc_opts.gamma, "aspect exponent gamma")->required();
    sub_cc->add_option("--lambda", cc_opts.lambda, "scale lambda")->required();
    sub_cc->add_option("--pairs", cc_opts.pairs,
                       "semicolon-separated x1,y1,x2,y2 groups")->capture_default_str();
    sub_cc->callback([&]() { cmd_cov_check(g, cc_opts); });

    std::vector<std::string> args(argv + 1, argv + argc);
    // Pre-scan for --config so its contents can be merged before parsing.
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }

    try {
        if (!config_path.empty()) args = apply_config(app, args, config_path);
        // CLI11 parses argument vectors in reverse order.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const lsc::model_error& e) {
        std::cerr << "error (model): " << e.what() << "\n";
        return 3;
    } catch (const lsc::resource_error& e) {
        std::cerr << "error (resource): " << e.what() << "\n";
        return 4;
    } catch (const std::bad_alloc&) {
        std::cerr << "error (resource): out of memory\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
