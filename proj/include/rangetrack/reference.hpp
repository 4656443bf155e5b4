#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rangetrack {

using Eigen::VectorXd;

// Raised when a declarative object is constructed with inconsistent data.
// `field` names the offending field so config errors can be reported by path.
class validation_error : public std::runtime_error {
public:
    validation_error(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Time-varying reference signal x_r(t).
///
/// A closed set of three parametric kinds (constant, piecewise-linear,
/// sinusoid) keeps config files declarative. Piecewise-linear signals hold
/// their end values outside the knot span, so evaluation is defined for all t.
class ReferenceSignal {
public:
    static ReferenceSignal constant(VectorXd value);
    static ReferenceSignal piecewise_linear(std::vector<double> times,
                                            std::vector<VectorXd> values);
    // value_i(t) = offset_i + amplitude_i * sin(2*pi*t/period + phase_i)
    static ReferenceSignal sinusoid(VectorXd amplitude, double period,
                                    VectorXd offset, VectorXd phase);

    int dim() const { return dim_; }

    VectorXd value(double t) const;

    // d x_r / dt. Right-sided at piecewise-linear knots, zero beyond the span.
    VectorXd rate(double t) const;

    const std::string& kind() const { return kind_; }

private:
    ReferenceSignal() = default;

    struct Constant {
        VectorXd value;
    };
    struct PiecewiseLinear {
        std::vector<double> times;
        std::vector<VectorXd> values;
    };
    struct Sinusoid {
        VectorXd amplitude;
        double period = 1.0;
        VectorXd offset;
        VectorXd phase;
    };

    std::variant<Constant, PiecewiseLinear, Sinusoid> impl_;
    int dim_ = 0;
    std::string kind_;
};

}  // namespace rangetrack
