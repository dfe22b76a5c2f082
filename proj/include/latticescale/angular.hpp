#pragma once

#include <functional>
#include <vector>

namespace lsc {

// A bounded function on [-1, 1], stored as 1025 equally spaced samples with
// piecewise-linear interpolation.  Used for the angular part of long-range
// coefficient asymptotics; the argument is the cosine-like coordinate
// t / (t^2 + |s|^{2 q2/q1})^{1/2}.
class AngularFunction {
public:
    static constexpr int table_size = 1025;

    // The constant function c.
    static AngularFunction constant(double c);
    // Sample an arbitrary callable at the table nodes.
    static AngularFunction from_function(const std::function<double(double)>& f);
    // Adopt explicit samples; must have exactly table_size entries, all finite.
    static AngularFunction from_samples(const std::vector<double>& samples);

    // Piecewise-linear evaluation; the argument is clamped to [-1, 1].
    double operator()(double z) const;

    bool is_constant() const;
    double max_abs() const;
    const std::vector<double>& samples() const { return samples_; }

private:
    AngularFunction() = default;
    std::vector<double> samples_;
};

} // namespace lsc
