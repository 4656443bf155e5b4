#include "rangetrack/reference.hpp"

#include <algorithm>
#include <cmath>

namespace rangetrack {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

ReferenceSignal ReferenceSignal::constant(VectorXd value) {
    if (value.size() == 0)
        throw validation_error("reference.value", "must be non-empty");
    ReferenceSignal r;
    r.dim_ = static_cast<int>(value.size());
    r.kind_ = "constant";
    r.impl_ = Constant{std::move(value)};
    return r;
}

ReferenceSignal ReferenceSignal::piecewise_linear(std::vector<double> times,
                                                  std::vector<VectorXd> values) {
    if (times.empty() || times.size() != values.size())
        throw validation_error("reference.knots",
                               "need matching, non-empty time and value lists");
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw validation_error("reference.knots",
                                   "knot times must be strictly increasing");
    const auto d = values.front().size();
    if (d == 0) throw validation_error("reference.knots", "values must be non-empty");
    for (const auto& v : values)
        if (v.size() != d)
            throw validation_error("reference.knots", "inconsistent value dimensions");
    ReferenceSignal r;
    r.dim_ = static_cast<int>(d);
    r.kind_ = "piecewise_linear";
    r.impl_ = PiecewiseLinear{std::move(times), std::move(values)};
    return r;
}

ReferenceSignal ReferenceSignal::sinusoid(VectorXd amplitude, double period,
                                          VectorXd offset, VectorXd phase) {
    const auto d = amplitude.size();
    if (d == 0) throw validation_error("reference.amplitude", "must be non-empty");
    if (offset.size() != d || phase.size() != d)
        throw validation_error("reference",
                               "amplitude, offset and phase must have equal sizes");
    if (!(period > 0.0) || !std::isfinite(period))
        throw validation_error("reference.period", "must be finite and > 0");
    ReferenceSignal r;
    r.dim_ = static_cast<int>(d);
    r.kind_ = "sinusoid";
    r.impl_ = Sinusoid{std::move(amplitude), period, std::move(offset), std::move(phase)};
    return r;
}

VectorXd ReferenceSignal::value(double t) const {
    if (!std::isfinite(t))
        throw validation_error("reference.t", "evaluation time must be finite");
    return std::visit(
        [&](const auto& s) -> VectorXd {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return s.value;
            } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                if (t <= s.times.front()) return s.values.front();
                if (t >= s.times.back()) return s.values.back();
                auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
                const size_t hi = static_cast<size_t>(it - s.times.begin());
                const size_t lo = hi - 1;
                const double w = (t - s.times[lo]) / (s.times[hi] - s.times[lo]);
                return (1.0 - w) * s.values[lo] + w * s.values[hi];
            } else {
                VectorXd v(dim_);
                for (int i = 0; i < dim_; ++i)
                    v[i] = s.offset[i] +
                           s.amplitude[i] * std::sin(kTwoPi * t / s.period + s.phase[i]);
                return v;
            }
        },
        impl_);
}

VectorXd ReferenceSignal::rate(double t) const {
    if (!std::isfinite(t))
        throw validation_error("reference.t", "evaluation time must be finite");
    return std::visit(
        [&](const auto& s) -> VectorXd {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return VectorXd::Zero(dim_);
            } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                if (t < s.times.front() || t >= s.times.back())
                    return VectorXd::Zero(dim_);
                auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
                const size_t hi = static_cast<size_t>(it - s.times.begin());
                const size_t lo = hi - 1;
                return (s.values[hi] - s.values[lo]) / (s.times[hi] - s.times[lo]);
            } else {
                VectorXd v(dim_);
                const double w = kTwoPi / s.period;
                for (int i = 0; i < dim_; ++i)
                    v[i] = s.amplitude[i] * w * std::cos(w * t + s.phase[i]);
                return v;
            }
        },
        impl_);
}

}  // namespace rangetrack
