#include "latticescale/region_atlas.hpp"

#include "latticescale/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace lsc::atlas {

namespace {

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

} // namespace

std::string to_string(RegionTag tag) {
    switch (tag) {
        case RegionTag::R11: return "R11";
        case RegionTag::R12: return "R12";
        case RegionTag::R21: return "R21";
        case RegionTag::R22_plus: return "R22+";
        case RegionTag::R22_minus: return "R22-";
        case RegionTag::R23: return "R23";
        case RegionTag::R32: return "R32";
        case RegionTag::R33: return "R33";
        case RegionTag::SRD_like: return "SRD-like";
        case RegionTag::boundary: return "boundary";
    }
    throw std::invalid_argument("bad region tag");
}

std::string to_string(ScaleSymbol s) {
    switch (s) {
        case ScaleSymbol::sigma1: return "sigma1";
        case ScaleSymbol::sigma2: return "sigma2";
        case ScaleSymbol::sigma1_tilde: return "sigma1_tilde";
        case ScaleSymbol::sigma2_tilde: return "sigma2_tilde";
        case ScaleSymbol::sigma_edge1: return "sigma_edge1";
        case ScaleSymbol::sigma_edge2: return "sigma_edge2";
        case ScaleSymbol::mixed_edge: return "mixed_edge";
        case ScaleSymbol::V0_kernel: return "V0_kernel";
    }
    throw std::invalid_argument("bad scale symbol");
}

std::string to_string(TransitionSide s) {
    switch (s) {
        case TransitionSide::plus: return "plus";
        case TransitionSide::minus: return "minus";
        case TransitionSide::balanced: return "balanced";
    }
    throw std::invalid_argument("bad transition side");
}

ModelExponents exponents(double q1, double q2) {
    if (std::isnan(q1) || std::isnan(q2) || q1 <= 0.0 || q2 <= 0.0)
        throw std::invalid_argument("exponents: q1 and q2 must be positive");
    ModelExponents e;
    e.q1 = q1;
    e.q2 = q2;
    e.Q = 1.0 / q1 + 1.0 / q2;
    e.H1 = 0.5 + q1 * (e.Q - 1.0);
    e.H2 = 0.5 + q2 * (e.Q - 1.0);
    e.H1_tilde = 1.0 - 0.5 * q1 * (2.0 - e.Q);
    e.H2_tilde = 1.0 - 0.5 * q2 * (2.0 - e.Q);
    e.gamma0 = q1 / q2;
    e.gamma0_edge1 = 1.0 / (2.0 * q2 * (1.0 - e.Q));
    e.gamma0_edge2 = 2.0 * q1 * (1.0 - e.Q);
    e.Q_edge1 = 1.5 / q1 + 1.0 / q2;
    e.Q_edge2 = 1.0 / q1 + 1.5 / q2;
    e.Q_tilde1 = 0.5 / q1 + 1.0 / q2;
    e.Q_tilde2 = 1.0 / q1 + 0.5 / q2;
    return e;
}

RegionId classify(double q1, double q2, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("classify: tol must be positive");
    ModelExponents e = exponents(q1, q2);
    if (e.Q <= 0.0 || e.Q >= 2.0 + tol)
        throw model_error("classify: Q = " + std::to_string(e.Q) +
                          " lies outside the model range (0, 2)");
    RegionId id;
    if (near(e.Q, 1.0, tol)) {
        id.boundary_detail = "Q = 1";
        return id;
    }
    if (near(e.Q, 2.0, tol)) {
        id.boundary_detail = "Q = 2";
        return id;
    }
    if (e.Q < 1.0) {
        if (near(e.Q_edge1, 1.0, tol)) {
            id.boundary_detail = "Q_edge1 = 1";
            return id;
        }
        if (near(e.Q_edge2, 1.0, tol)) {
            id.boundary_detail = "Q_edge2 = 1";
            return id;
        }
        bool e1 = e.Q_edge1 > 1.0, e2 = e.Q_edge2 > 1.0;
        id.tag = e1 ? (e2 ? RegionTag::R22_minus : RegionTag::R23)
                    : (e2 ? RegionTag::R32 : RegionTag::R33);
        return id;
    }
    if (near(e.Q_tilde1, 1.0, tol)) {
        id.boundary_detail = "Q_tilde1 = 1";
        return id;
    }
    if (near(e.Q_tilde2, 1.0, tol)) {
        id.boundary_detail = "Q_tilde2 = 1";
        return id;
    }
    bool t1 = e.Q_tilde1 < 1.0, t2 = e.Q_tilde2 < 1.0;
    id.tag = t1 ? (t2 ? RegionTag::R22_plus : RegionTag::R12)
                : (t2 ? RegionTag::R21 : RegionTag::R11);
    return id;
}

double critical_gamma(const ModelExponents& exps, const RegionId& region) {
    switch (region.tag) {
        case RegionTag::R11:
        case RegionTag::R12:
        case RegionTag::R21:
        case RegionTag::R22_plus:
        case RegionTag::R22_minus:
            return exps.gamma0;
        case RegionTag::R23:
            return exps.gamma0_edge2;
        case RegionTag::R32:
            return exps.gamma0_edge1;
        case RegionTag::R33:
            return 1.0;
        case RegionTag::SRD_like:
        case RegionTag::boundary:
            break;
    }
    throw model_error("critical_gamma: no scaling transition defined for region " +
                      to_string(region.tag) +
                      (region.boundary_detail.empty() ? ""
                                                      : " (" + region.boundary_detail + ")"));
}

double normalization_exponent(const ModelExponents& exps, const RegionId& region,
                              double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("normalization_exponent: gamma must be positive");
    double g0;
    switch (region.tag) {
        case RegionTag::R22_minus:
            g0 = exps.gamma0;
            return gamma >= g0 ? exps.H1 + 0.5 * gamma : gamma * exps.H2 + 0.5;
        case RegionTag::R23:
            g0 = exps.gamma0_edge2;
            return gamma <= g0 ? 0.5 : exps.H1 + 0.5 * gamma;
        case RegionTag::R32:
            g0 = exps.gamma0_edge1;
            return gamma >= g0 ? 0.5 * gamma : gamma * exps.H2 + 0.5;
        case RegionTag::R33:
            return std::max(0.5, 0.5 * gamma);
        case RegionTag::R11:
        case RegionTag::R12:
        case RegionTag::R21:
        case RegionTag::R22_plus:
            throw model_error(
                "normalization_exponent: no closed exponent is provided for the "
                "long-range-dependent regions (Q > 1); see limit_descriptor for the "
                "limit identities");
        case RegionTag::SRD_like:
        case RegionTag::boundary:
            break;
    }
    throw model_error("normalization_exponent: unsupported region " +
                      to_string(region.tag));
}

LimitDescriptor limit_descriptor(const ModelExponents& exps, const RegionId& region,
                                 double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("limit_descriptor: gamma must be positive");

    auto sheet = [](double hx, double hy, ScaleSymbol sc, TransitionSide side,
                    std::string what) {
        LimitDescriptor d;
        d.hurst_pair = std::make_pair(hx, hy);
        d.scale = sc;
        d.side = side;
        d.description = std::move(what);
        return d;
    };

    double g0 = critical_gamma(exps, region);
    bool plus = gamma > g0, balanced = gamma == g0;

    switch (region.tag) {
        case RegionTag::R22_minus:
            if (balanced) {
                LimitDescriptor d;
                d.scale = ScaleSymbol::V0_kernel;
                d.side = TransitionSide::balanced;
                d.description = "balanced kernel limit V0 (well-defined for all gamma)";
                return d;
            }
            return plus ? sheet(exps.H1, 0.5, ScaleSymbol::sigma1, TransitionSide::plus,
                                "fractional Brownian sheet B(H1, 1/2), scale sigma1")
                        : sheet(0.5, exps.H2, ScaleSymbol::sigma2, TransitionSide::minus,
                                "fractional Brownian sheet B(1/2, H2), scale sigma2");
        case RegionTag::R23:
            if (balanced)
                throw model_error(
                    "limit_descriptor: the balanced limit at gamma0 in R23 is open");
            return plus ? sheet(exps.H1, 0.5, ScaleSymbol::sigma1, TransitionSide::plus,
                                "fractional Brownian sheet B(H1, 1/2), scale sigma1")
                        : sheet(0.5, 0.0, ScaleSymbol::sigma_edge1, TransitionSide::minus,
                                "edge sheet B(1/2, 0), scale sigma_edge1");
        case RegionTag::R32:
            if (balanced)
                throw model_error(
                    "limit_descriptor: the balanced limit at gamma0 in R32 is open");
            return plus ? sheet(0.0, 0.5, ScaleSymbol::sigma_edge2, TransitionSide::plus,
                                "edge sheet B(0, 1/2), scale sigma_edge2")
                        : sheet(0.5, exps.H2, ScaleSymbol::sigma2, TransitionSide::minus,
                                "fractional Brownian sheet B(1/2, H2), scale sigma2");
        case RegionTag::R33:
            if (balanced) {
                LimitDescriptor d;
                d.scale = ScaleSymbol::mixed_edge;
                d.side = TransitionSide::balanced;
                d.description =
                    "independent sum sigma_edge1 B(1/2, 0) + sigma_edge2 B(0, 1/2)";
                return d;
            }
            return plus ? sheet(0.0, 0.5, ScaleSymbol::sigma_edge2, TransitionSide::plus,
                                "edge sheet B(0, 1/2), scale sigma_edge2")
                        : sheet(0.5, 0.0, ScaleSymbol::sigma_edge1, TransitionSide::minus,
                                "edge sheet B(1/2, 0), scale sigma_edge1");
        case RegionTag::R22_plus:
        case RegionTag::R12:
        case RegionTag::R21:
        case RegionTag::R11: {
            if (balanced)
                throw model_error(
                    "limit_descriptor: balanced limits are only established under "
                    "negative dependence (Q < 1)");
            if (plus) {
                if (exps.Q_tilde1 < 1.0)
                    return sheet(exps.H1, 0.5, ScaleSymbol::sigma1, TransitionSide::plus,
                                 "fractional Brownian sheet B(H1, 1/2), scale sigma1");
                return sheet(1.0, exps.H2_tilde, ScaleSymbol::sigma1_tilde,
                             TransitionSide::plus,
                             "degenerate sheet B(1, H2~), scale sigma1_tilde");
            }
            if (exps.Q_tilde2 < 1.0)
                return sheet(0.5, exps.H2, ScaleSymbol::sigma2, TransitionSide::minus,
                             "fractional Brownian sheet B(1/2, H2), scale sigma2");
            return sheet(exps.H1_tilde, 1.0, ScaleSymbol::sigma2_tilde,
                         TransitionSide::minus,
                         "degenerate sheet B(H1~, 1), scale sigma2_tilde");
        }
        case RegionTag::SRD_like:
        case RegionTag::boundary:
            break;
    }
    throw model_error("limit_descriptor: unsupported region " + to_string(region.tag));
}

std::vector<PhasePoint> phase_diagram(
    const std::vector<std::pair<double, double>>& inv_points, double tol) {
    std::vector<PhasePoint> out;
    out.reserve(inv_points.size());
    for (auto [x, y] : inv_points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument(
                "phase_diagram: points must have positive coordinates (1/q1, 1/q2)");
        PhasePoint p;
        p.inv_q1 = x;
        p.inv_q2 = y;
        p.exps = exponents(1.0 / x, 1.0 / y);
        try {
            p.region = classify(1.0 / x, 1.0 / y, tol);
        } catch (const model_error& err) {
            p.region.tag = RegionTag::boundary;
            p.region.boundary_detail = err.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace lsc::atlas
