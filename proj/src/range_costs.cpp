#include "rangetrack/range_costs.hpp"

#include <cmath>

namespace rangetrack {

namespace {

double sech2(double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

void check_dims(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                const char* field) {
    if (x.size() != spec.dim || xr.size() != spec.dim)
        throw validation_error(field, "state/reference dimension must equal spec.dim");
}

// Two-sided tanh blend for scalar deviation e: approaches `inside` for
// |e| << delta and `outside` for |e| >> delta.
double blend_1d(double e, double delta, double k1, double inside, double outside,
                double* de) {
    const double a = k1 * (e - delta);
    const double b = -k1 * (e + delta);
    const double c = 0.5 * (outside - inside);
    if (de) *de = c * k1 * (sech2(a) - sech2(b));
    return outside + c * (std::tanh(a) + std::tanh(b));
}

// Radial blend on the squared distance s = ||x-xr||^2, smooth at s = 0.
double blend_radial(double s, double delta, double k1, double inside, double outside,
                    double* ds) {
    const double a = k1 * (s - delta * delta);
    if (ds) *ds = 0.5 * (outside - inside) * k1 * sech2(a);
    return outside + 0.5 * (inside - outside) * (1.0 - std::tanh(a));
}

// Dispatches to the 1D or radial blend and maps the scalar derivative back to
// a gradient in x.
double blend(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec, double k1,
             double inside, double outside, VectorXd* dx) {
    if (spec.dim == 1) {
        double de = 0.0;
        const double v = blend_1d(x[0] - xr[0], spec.delta, k1, inside, outside,
                                  dx ? &de : nullptr);
        if (dx) {
            dx->resize(1);
            (*dx)[0] = de;
        }
        return v;
    }
    const VectorXd d = x - xr;
    double ds = 0.0;
    const double v =
        blend_radial(d.squaredNorm(), spec.delta, k1, inside, outside, dx ? &ds : nullptr);
    if (dx) *dx = 2.0 * ds * d;
    return v;
}

}  // namespace

void RangeSpec::check(std::vector<std::string>* warnings) const {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw validation_error("range.delta", "must be finite and > 0");
    if (!std::isfinite(alpha) || !std::isfinite(beta))
        throw validation_error("range.alpha", "alpha and beta must be finite");
    if (alpha == beta)
        throw validation_error("range.alpha",
                               "alpha must differ from beta (equal values make the "
                               "stage cost constant)");
    if (dim < 1) throw validation_error("range.dim", "must be >= 1");
    if (reference.dim() != dim)
        throw validation_error("range.reference", "reference dimension must equal dim");
    if (warnings && alpha == 0.0 && beta >= 0.0)
        warnings->push_back(
            "range: alpha = 0 with beta >= 0 leaves the in-range plateau at zero "
            "reward; solutions inside the range become interchangeable. Prefer "
            "alpha < 0.");
}

void SmoothingParams::check() const {
    if (!(k1 > 0.0)) throw validation_error("smoothing.k1", "must be > 0");
    if (!(k2 > 0.0)) throw validation_error("smoothing.k2", "must be > 0");
    if (!(rho > 0.0)) throw validation_error("smoothing.rho", "must be > 0");
    if (!(gamma > 1.0)) throw validation_error("smoothing.gamma", "must be > 1");
}

double indicator_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec) {
    check_dims(x, xr, spec, "indicator_cost");
    const double dist = spec.dim == 1 ? std::abs(x[0] - xr[0]) : (x - xr).norm();
    return dist <= spec.delta ? spec.alpha : spec.beta;
}

double smooth_inrange_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                           double k1, VectorXd* dx) {
    check_dims(x, xr, spec, "smooth_inrange_cost");
    return blend(x, xr, spec, k1, spec.alpha, spec.beta, dx);
}

double smooth_outside_indicator(const VectorXd& x, const VectorXd& xr,
                                const RangeSpec& spec, double k1, VectorXd* dx) {
    check_dims(x, xr, spec, "smooth_outside_indicator");
    return blend(x, xr, spec, k1, 0.0, 1.0, dx);
}

double smooth_max(const VectorXd& values, double rho, VectorXd* weights) {
    if (values.size() == 0)
        throw validation_error("smooth_max", "value list must be non-empty");
    if (!(rho > 0.0)) throw validation_error("smooth_max.rho", "must be > 0");
    Eigen::Index imax = 0;
    const double m = values.maxCoeff(&imax);
    // Shifted exponents are all <= 1, so the sum never overflows and the
    // bracketing bounds max <= result <= max + log(N)/rho hold in floating
    // point, not just in exact arithmetic.
    VectorXd e(values.size());
    double rest = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i == imax) {
            e[i] = 1.0;
        } else {
            e[i] = std::exp(rho * (values[i] - m));
            rest += e[i];
        }
    }
    if (weights) *weights = e / (1.0 + rest);
    return m + std::log1p(rest) / rho;
}

double regularizer_value(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                         const SmoothingParams& params, VectorXd* dx) {
    check_dims(x, xr, spec, "regularizer_value");
    const VectorXd d = x - xr;
    const double s = d.squaredNorm();
    const double inv_k2 = 1.0 / params.k2;
    switch (params.regularizer) {
        case Regularizer::Quadratic:
            if (dx) *dx = 2.0 * inv_k2 * d;
            return inv_k2 * s;
        case Regularizer::Hinged: {
            Eigen::Vector2d pair(s - spec.delta * spec.delta, 0.0);
            VectorXd w;
            const double v = smooth_max(pair, params.rho, dx ? &w : nullptr);
            if (dx) *dx = 2.0 * inv_k2 * w[0] * d;
            return inv_k2 * v;
        }
        case Regularizer::IndicatorGated: {
            const double r = s - spec.delta * spec.delta;
            VectorXd dgate;
            const double gate =
                smooth_outside_indicator(x, xr, spec, params.k1, dx ? &dgate : nullptr);
            if (dx) *dx = inv_k2 * (r * dgate + gate * 2.0 * d);
            return inv_k2 * gate * r;
        }
        case Regularizer::None:
            throw validation_error("smoothing.regularizer",
                                   "regularizer_value called with regularizer=none");
    }
    throw validation_error("smoothing.regularizer", "unknown regularizer");
}

double nair_stage_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                       const SmoothingParams& params, VectorXd* dx) {
    double v = smooth_inrange_cost(x, xr, spec, params.k1, dx);
    if (params.regularizer != Regularizer::None) {
        VectorXd dr;
        v += regularizer_value(x, xr, spec, params, dx ? &dr : nullptr);
        if (dx) *dx += dr;
    }
    return v;
}

double multi_agent_nair_cost(const VectorXd& per_agent_costs, const RangeSpec& spec,
                             const SmoothingParams& params, MultiAgentMode mode,
                             VectorXd* dcosts) {
    if (per_agent_costs.size() == 0)
        throw validation_error("multi_agent_nair_cost", "per-agent cost list is empty");
    VectorXd win;
    const double inner =
        smooth_max(-per_agent_costs, params.rho, dcosts || mode == MultiAgentMode::Clipped
                                                     ? &win
                                                     : nullptr);
    if (mode == MultiAgentMode::Plain) {
        if (dcosts) *dcosts = win;
        return -inner;
    }
    if (!(spec.alpha < 0.0) || spec.beta != 0.0)
        throw validation_error("multi_agent_nair_cost",
                               "clipped mode requires alpha < 0 and beta = 0");
    VectorXd wout;
    const double v = smooth_max(Eigen::Vector2d(-params.gamma * inner, spec.alpha),
                                params.rho, dcosts ? &wout : nullptr);
    if (dcosts) *dcosts = params.gamma * wout[0] * win;
    return v;
}

double air_constraint_residual(const VectorXd& x, const VectorXd& xr,
                               const RangeSpec& spec, VectorXd* dx) {
    check_dims(x, xr, spec, "air_constraint_residual");
    const VectorXd d = x - xr;
    if (dx) *dx = 2.0 * d;
    return d.squaredNorm() - spec.delta * spec.delta;
}

double multi_air_constraint_residual(const std::vector<VectorXd>& xs, const VectorXd& xr,
                                     const RangeSpec& spec, double rho,
                                     std::vector<VectorXd>* dxs) {
    if (xs.empty())
        throw validation_error("multi_air_constraint_residual", "agent list is empty");
    const auto n = static_cast<Eigen::Index>(xs.size());
    VectorXd neg_residuals(n);
    for (Eigen::Index i = 0; i < n; ++i)
        neg_residuals[i] = -air_constraint_residual(xs[i], xr, spec);
    VectorXd w;
    const double v = smooth_max(neg_residuals, rho, dxs ? &w : nullptr);
    if (dxs) {
        dxs->resize(xs.size());
        for (Eigen::Index i = 0; i < n; ++i) (*dxs)[i] = w[i] * 2.0 * (xs[i] - xr);
    }
    return -v;
}

}  // namespace rangetrack
