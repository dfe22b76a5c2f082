#include "latticescale/angular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsc {

AngularFunction AngularFunction::constant(double c) {
    if (!std::isfinite(c)) throw std::invalid_argument("angular constant must be finite");
    AngularFunction a;
    a.samples_.assign(table_size, c);
    return a;
}

AngularFunction AngularFunction::from_function(const std::function<double(double)>& f) {
    std::vector<double> s(table_size);
    for (int i = 0; i < table_size; ++i) {
        double z = -1.0 + 2.0 * i / (table_size - 1);
        s[i] = f(z);
    }
    return from_samples(s);
}

AngularFunction AngularFunction::from_samples(const std::vector<double>& samples) {
    if (samples.size() != static_cast<std::size_t>(table_size))
        throw std::invalid_argument("angular table must have exactly 1025 samples");
    for (double v : samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("angular table samples must be finite");
    AngularFunction a;
    a.samples_ = samples;
    return a;
}

double AngularFunction::operator()(double z) const {
    z = std::clamp(z, -1.0, 1.0);
    double pos = (z + 1.0) * 0.5 * (table_size - 1);
    int i = static_cast<int>(pos);
    if (i >= table_size - 1) return samples_.back();
    double frac = pos - i;
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
}

bool AngularFunction::is_constant() const {
    return std::all_of(samples_.begin(), samples_.end(),
                       [&](double v) { return v == samples_.front(); });
}

double AngularFunction::max_abs() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

} // namespace lsc
