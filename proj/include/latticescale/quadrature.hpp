#pragma once

#include <functional>
#include <vector>

namespace lsc::quad {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
};

struct QuadOptions {
    double epsabs = 1e-12;
    double epsrel = 1e-10;
    std::size_t limit = 2000; // max subintervals
    // Accept a result whose reported error is within this factor of the
    // request; beyond that the integration is considered failed.
    double slack = 100.0;
};

using Fn = std::function<double(double)>;

// Adaptive integration on [a, b] (endpoint singularities allowed).
QuadResult integrate(const Fn& f, double a, double b, const QuadOptions& opt = {});
// As above with known interior singular points.
QuadResult integrate_with_points(const Fn& f, std::vector<double> points,
                                 const QuadOptions& opt = {});
// Adaptive integration on [a, +inf).
QuadResult integrate_upper(const Fn& f, double a, const QuadOptions& opt = {});
// Adaptive integration on (-inf, b].
QuadResult integrate_lower(const Fn& f, double b, const QuadOptions& opt = {});
// Adaptive integration on the whole line.
QuadResult integrate_line(const Fn& f, const QuadOptions& opt = {});

} // namespace lsc::quad
