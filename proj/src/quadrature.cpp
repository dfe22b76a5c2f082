#include "latticescale/quadrature.hpp"

#include "latticescale/errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>

namespace lsc::quad {

namespace {

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const {
        gsl_integration_workspace_free(w);
    }
};
using Workspace =
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;

void disable_gsl_abort() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

double trampoline(double x, void* params) {
    return (*static_cast<const Fn*>(params))(x);
}

QuadResult finish(int status, double result, double abserr,
                  const QuadOptions& opt, const char* what) {
    double tol = std::max(opt.epsabs, opt.epsrel * std::abs(result));
    if (status != GSL_SUCCESS && abserr > opt.slack * tol) {
        throw lsc::resource_error(std::string("quadrature failed (") + what +
                                  "): " + gsl_strerror(status) +
                                  ", error estimate " + std::to_string(abserr));
    }
    return {result, abserr};
}

} // namespace

QuadResult integrate(const Fn& f, double a, double b, const QuadOptions& opt) {
    disable_gsl_abort();
    Workspace w(gsl_integration_workspace_alloc(opt.limit));
    gsl_function gf{&trampoline, const_cast<Fn*>(&f)};
    double result = 0, abserr = 0;
    int status = gsl_integration_qags(&gf, a, b, opt.epsabs, opt.epsrel,
                                      opt.limit, w.get(), &result, &abserr);
    return finish(status, result, abserr, opt, "qags");
}

QuadResult integrate_with_points(const Fn& f, std::vector<double> points,
                                 const QuadOptions& opt) {
    disable_gsl_abort();
    std::sort(points.begin(), points.end());
    Workspace w(gsl_integration_workspace_alloc(opt.limit));
    gsl_function gf{&trampoline, const_cast<Fn*>(&f)};
    double result = 0, abserr = 0;
    int status = gsl_integration_qagp(&gf, points.data(), points.size(),
                                      opt.epsabs, opt.epsrel, opt.limit,
                                      w.get(), &result, &abserr);
    return finish(status, result, abserr, opt, "qagp");
}

QuadResult integrate_upper(const Fn& f, double a, const QuadOptions& opt) {
    disable_gsl_abort();
    Workspace w(gsl_integration_workspace_alloc(opt.limit));
    gsl_function gf{&trampoline, const_cast<Fn*>(&f)};
    double result = 0, abserr = 0;
    int status = gsl_integration_qagiu(&gf, a, opt.epsabs, opt.epsrel,
                                       opt.limit, w.get(), &result, &abserr);
    return finish(status, result, abserr, opt, "qagiu");
}

QuadResult integrate_lower(const Fn& f, double b, const QuadOptions& opt) {
    disable_gsl_abort();
    Workspace w(gsl_integration_workspace_alloc(opt.limit));
    gsl_function gf{&trampoline, const_cast<Fn*>(&f)};
    double result = 0, abserr = 0;
    int status = gsl_integration_qagil(&gf, b, opt.epsabs, opt.epsrel,
                                       opt.limit, w.get(), &result, &abserr);
    return finish(status, result, abserr, opt, "qagil");
}

QuadResult integrate_line(const Fn& f, const QuadOptions& opt) {
    disable_gsl_abort();
    Workspace w(gsl_integration_workspace_alloc(opt.limit));
    gsl_function gf{&trampoline, const_cast<Fn*>(&f)};
    double result = 0, abserr = 0;
    int status = gsl_integration_qagi(&gf, opt.epsabs, opt.epsrel, opt.limit,
                                      w.get(), &result, &abserr);
    return finish(status, result, abserr, opt, "qagi");
}

} // namespace lsc::quad
