#pragma once

#include "rangetrack/reference.hpp"

#include <Eigen/Core>

#include <vector>

namespace rangetrack {

enum class Regularizer { None, Quadratic, Hinged, IndicatorGated };

/// Geometry and values of the in-range objective: the tracker is "in range"
/// when its distance to the reference is at most delta. Stage value is alpha
/// inside, beta outside. dim=1 tracks a scalar; dim>1 uses Euclidean distance.
struct RangeSpec {
    ReferenceSignal reference = ReferenceSignal::constant(VectorXd::Zero(1));
    double delta = 1.5;
    double alpha = -2.0;
    double beta = 0.0;
    int dim = 1;

    void check(std::vector<std::string>* warnings = nullptr) const;
};

struct SmoothingParams {
    double k1 = 1.0;   // indicator sharpness
    double k2 = 1e5;   // regularization weight divisor
    double rho = 1.0;  // smooth-max sharpness
    double gamma = 6.0;  // clipping pre-gain for the clipped multi-agent cost
    Regularizer regularizer = Regularizer::Quadratic;

    void check() const;
};

/// Exact piecewise-constant stage cost: alpha if dist(x, xr) <= delta, else
/// beta. The boundary counts as in-range.
double indicator_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec);

/// Smooth surrogate of indicator_cost. dim=1 blends two tanh steps at the
/// range edges; dim>1 applies one tanh to ||x-xr||^2 - delta^2. Value lies
/// strictly between min(alpha, beta) and max(alpha, beta).
double smooth_inrange_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                           double k1, VectorXd* dx = nullptr);

/// Smooth [0,1]-valued out-of-range indicator (0 deep inside the range,
/// 1 deep outside), built with the same tanh construction as
/// smooth_inrange_cost. Used to gate the indicator-gated regularizer.
double smooth_outside_indicator(const VectorXd& x, const VectorXd& xr,
                                const RangeSpec& spec, double k1,
                                VectorXd* dx = nullptr);

/// Log-sum-exp over-approximation of max(values): (1/rho) log sum exp(rho v_i),
/// computed with max-subtraction. Guarantees
///   max(v) <= smooth_max(v, rho) <= max(v) + log(N)/rho.
/// `weights` receives the softmax gradient d/dv_i (entries sum to 1).
double smooth_max(const VectorXd& values, double rho, VectorXd* weights = nullptr);

/// Regularization term added to the smoothed in-range cost so the objective
/// retains slope far from the range:
///   quadratic:       dist^2 / k2
///   hinged:          smooth_max({dist^2 - delta^2, 0}, rho) / k2
///   indicator-gated: smooth_outside_indicator * (dist^2 - delta^2) / k2
double regularizer_value(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                         const SmoothingParams& params, VectorXd* dx = nullptr);

/// Full smoothed stage cost for the not-always-in-range formulation:
/// smooth_inrange_cost plus the selected regularizer.
double nair_stage_cost(const VectorXd& x, const VectorXd& xr, const RangeSpec& spec,
                       const SmoothingParams& params, VectorXd* dx = nullptr);

enum class MultiAgentMode { Plain, Clipped };

/// Aggregates per-agent smoothed stage costs l_i into the team cost
/// min_i l_i, smoothed through the max operator:
///   plain:   -smooth_max({-l_i}, rho)
///   clipped: smooth_max({-gamma * smooth_max({-l_i}, rho), alpha}, rho)
/// The clipped form floors the reward at alpha so overlapping coverage by
/// several agents is not over-counted; it requires alpha < 0 and beta = 0.
/// `dcosts` receives d/dl_i.
double multi_agent_nair_cost(const VectorXd& per_agent_costs, const RangeSpec& spec,
                             const SmoothingParams& params, MultiAgentMode mode,
                             VectorXd* dcosts = nullptr);

/// Always-in-range path residual, nonpositive exactly when in range:
/// dist(x, xr)^2 - delta^2.
double air_constraint_residual(const VectorXd& x, const VectorXd& xr,
                               const RangeSpec& spec, VectorXd* dx = nullptr);

/// Team variant: smooth surrogate of min_i dist(x_i, xr)^2 - delta^2,
/// nonpositive (up to smoothing error) when the nearest agent is in range.
double multi_air_constraint_residual(const std::vector<VectorXd>& xs, const VectorXd& xr,
                                     const RangeSpec& spec, double rho,
                                     std::vector<VectorXd>* dxs = nullptr);

}  // namespace rangetrack
