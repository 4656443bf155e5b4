#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "rangetrack/reference.hpp"

namespace rangetrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gradient of a scalar stage quantity with respect to (x, u, p, t).
struct StageGrad {
    VectorXd x, u, p;
    double t = 0.0;
};

// Scalar quantity evaluated along the trajectory (stage cost or path
// constraint). When `grad` is non-null the caller has zero-initialized it to
// the right sizes; the callback writes the entries its quantity depends on.
// Callbacks must be pure.
using StageFn = std::function<double(const VectorXd& x, const VectorXd& u,
                                     const VectorXd& p, double t, StageGrad* grad)>;

struct DynamicsJac {
    MatrixXd x;   // n x n
    MatrixXd u;   // n x m
    MatrixXd p;   // n x np
    VectorXd t;   // n
};

// Explicit ODE right-hand side xdot = f(x, u, p, t). A non-null `jac` is
// zero-initialized by the caller; the callback writes the nonzero entries.
using DynamicsFn = std::function<VectorXd(const VectorXd& x, const VectorXd& u,
                                          const VectorXd& p, double t,
                                          DynamicsJac* jac)>;

void reset_grad(StageGrad& g, int state_dim, int input_dim, int param_dim);
void reset_jac(DynamicsJac& j, int state_dim, int input_dim, int param_dim);

struct BoundaryArgs {
    double t0 = 0.0, tf = 0.0;
    VectorXd x0, xf, u0, uf, p;
};

struct BoundaryGrad {
    double t0 = 0.0, tf = 0.0;
    VectorXd x0, xf, u0, uf, p;
};

// Scalar boundary quantity (Mayer term or boundary constraint). Gradient
// convention as for StageFn: caller zero-initializes, callback writes what
// it uses.
using BoundaryFn = std::function<double(const BoundaryArgs&, BoundaryGrad*)>;

void reset_grad(BoundaryGrad& g, int state_dim, int input_dim, int param_dim);

struct Bounds {
    VectorXd lower, upper;

    static Bounds unbounded(int n);
    static Bounds box(VectorXd lower, VectorXd upper);
    static Bounds fixed(const VectorXd& value);
};

struct Horizon {
    double t0 = 0.0;
    double tf = 1.0;       // used when !free_tf
    bool free_tf = false;
    double tf_lower = 0.0, tf_upper = 0.0;

    static Horizon fixed(double t0, double tf);
    static Horizon free_final(double t0, double tf_lower, double tf_upper);
};

/// Declarative continuous-time optimal control problem.
///
/// Decision objects are the state and input trajectories, the static
/// parameter vector and, for a free horizon, the final time. Objective is
/// the sum of Mayer terms plus the time integral of the Lagrange terms plus
/// duration_weight * (tf - t0). All callbacks must be pure and reentrant;
/// the spec itself is immutable once built and safe to share.
struct OcpSpec {
    int state_dim = 0;
    int input_dim = 0;
    int param_dim = 0;
    int agent_count = 1;   // identical per-agent blocks; state_dim % agent_count == 0

    DynamicsFn dynamics;
    std::vector<StageFn> lagrange_terms;
    std::vector<BoundaryFn> mayer_terms;
    double duration_weight = 0.0;  // adds duration_weight * (tf - t0)

    std::vector<StageFn> path_constraints;          // each <= 0 on the whole horizon
    std::vector<BoundaryFn> boundary_inequalities;  // each <= 0
    std::vector<BoundaryFn> boundary_equalities;    // each == 0

    Bounds state_bounds, input_bounds, param_bounds;
    // Endpoint overrides; empty means "same as state_bounds". Pinning initial
    // or terminal states through bounds keeps them exactly feasible at every
    // solver iterate.
    Bounds initial_state_bounds, final_state_bounds;

    Horizon horizon;

    std::vector<std::string> warnings;  // construction-time advisories

    // Full validation; throws validation_error naming the offending field.
    // Callback output dimensions are checked by probing at the bound midpoint.
    void check() const;

    const Bounds& effective_initial_bounds() const;
    const Bounds& effective_final_bounds() const;
};

// Quadratic regulation stage cost e'Qe + u'Ru. Q must be symmetric positive
// semidefinite and R symmetric positive definite; weight_grads fills
// d/de = 2Qe and d/du = 2Ru.
double setpoint_stage_cost(const VectorXd& e, const VectorXd& u, const MatrixXd& Q,
                           const MatrixXd& R, VectorXd* de = nullptr,
                           VectorXd* du = nullptr);

// Validates Q/R once so per-stage evaluations can skip the matrix checks.
void check_setpoint_weights(const MatrixXd& Q, const MatrixXd& R);

/// Discrete trajectory on a strictly increasing time grid. Rows of `states`
/// and `inputs` correspond to grid points.
struct Trajectory {
    VectorXd times;
    MatrixXd states;   // (grid points) x state_dim
    MatrixXd inputs;   // (grid points) x input_dim
    VectorXd params;

    void check() const;
};

}  // namespace rangetrack
