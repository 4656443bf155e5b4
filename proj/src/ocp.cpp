#include "rangetrack/ocp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace rangetrack {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_bounds(const Bounds& b, int n, const std::string& field) {
    if (b.lower.size() != n || b.upper.size() != n)
        throw validation_error(field, "bound vectors must have length " + std::to_string(n));
    for (int i = 0; i < n; ++i) {
        if (std::isnan(b.lower[i]) || std::isnan(b.upper[i]))
            throw validation_error(field, "bounds must not be NaN");
        if (b.lower[i] > b.upper[i])
            throw validation_error(field, "lower > upper at component " + std::to_string(i));
    }
}

// Probe point: bound midpoint where finite, clamped to the box otherwise.
VectorXd probe_point(const Bounds& b) {
    VectorXd x(b.lower.size());
    for (int i = 0; i < x.size(); ++i) {
        const double lo = b.lower[i], hi = b.upper[i];
        if (std::isfinite(lo) && std::isfinite(hi))
            x[i] = 0.5 * (lo + hi);
        else if (std::isfinite(lo))
            x[i] = lo + 1.0;
        else if (std::isfinite(hi))
            x[i] = hi - 1.0;
        else
            x[i] = 0.0;
    }
    return x;
}
}  // namespace

void reset_grad(StageGrad& g, int state_dim, int input_dim, int param_dim) {
    g.x.setZero(state_dim);
    g.u.setZero(input_dim);
    g.p.setZero(param_dim);
    g.t = 0.0;
}

void reset_jac(DynamicsJac& j, int state_dim, int input_dim, int param_dim) {
    j.x.setZero(state_dim, state_dim);
    j.u.setZero(state_dim, input_dim);
    j.p.setZero(state_dim, param_dim);
    j.t.setZero(state_dim);
}

void reset_grad(BoundaryGrad& g, int state_dim, int input_dim, int param_dim) {
    g.t0 = 0.0;
    g.tf = 0.0;
    g.x0.setZero(state_dim);
    g.xf.setZero(state_dim);
    g.u0.setZero(input_dim);
    g.uf.setZero(input_dim);
    g.p.setZero(param_dim);
}

Bounds Bounds::unbounded(int n) {
    return {VectorXd::Constant(n, -kInf), VectorXd::Constant(n, kInf)};
}

Bounds Bounds::box(VectorXd lower, VectorXd upper) {
    return {std::move(lower), std::move(upper)};
}

Bounds Bounds::fixed(const VectorXd& value) { return {value, value}; }

Horizon Horizon::fixed(double t0, double tf) {
    Horizon h;
    h.t0 = t0;
    h.tf = tf;
    h.free_tf = false;
    return h;
}

Horizon Horizon::free_final(double t0, double tf_lower, double tf_upper) {
    Horizon h;
    h.t0 = t0;
    h.free_tf = true;
    h.tf_lower = tf_lower;
    h.tf_upper = tf_upper;
    h.tf = tf_upper;
    return h;
}

const Bounds& OcpSpec::effective_initial_bounds() const {
    return initial_state_bounds.lower.size() ? initial_state_bounds : state_bounds;
}

const Bounds& OcpSpec::effective_final_bounds() const {
    return final_state_bounds.lower.size() ? final_state_bounds : state_bounds;
}

void OcpSpec::check() const {
    if (state_dim <= 0) throw validation_error("state_dim", "must be positive");
    if (input_dim <= 0) throw validation_error("input_dim", "must be positive");
    if (param_dim < 0) throw validation_error("param_dim", "must be non-negative");
    if (agent_count <= 0) throw validation_error("agent_count", "must be positive");
    if (state_dim % agent_count != 0)
        throw validation_error("agent_count", "state_dim must split evenly across agents");
    if (input_dim % agent_count != 0)
        throw validation_error("agent_count", "input_dim must split evenly across agents");
    if (!dynamics) throw validation_error("dynamics", "callback is required");
    if (!(duration_weight >= 0.0))
        throw validation_error("duration_weight", "must be >= 0");

    check_bounds(state_bounds, state_dim, "bounds.state");
    check_bounds(input_bounds, input_dim, "bounds.input");
    check_bounds(param_bounds, param_dim, "bounds.param");
    if (initial_state_bounds.lower.size())
        check_bounds(initial_state_bounds, state_dim, "bounds.initial_state");
    if (final_state_bounds.lower.size())
        check_bounds(final_state_bounds, state_dim, "bounds.final_state");

    if (!std::isfinite(horizon.t0)) throw validation_error("horizon.t0", "must be finite");
    if (horizon.free_tf) {
        if (!std::isfinite(horizon.tf_lower) || !std::isfinite(horizon.tf_upper))
            throw validation_error("horizon.tf", "free-final-time bounds must be finite");
        if (!(horizon.tf_lower < horizon.tf_upper))
            throw validation_error("horizon.tf", "tf_lower must be < tf_upper");
        if (!(horizon.tf_lower > horizon.t0))
            throw validation_error("horizon.tf", "tf_lower must be > t0");
    } else {
        if (!std::isfinite(horizon.tf)) throw validation_error("horizon.tf", "must be finite");
        if (!(horizon.tf > horizon.t0))
            throw validation_error("horizon.tf", "tf must be > t0");
    }

    // Probe callbacks once to check output and gradient arities.
    const VectorXd x = probe_point(state_bounds);
    const VectorXd u = probe_point(input_bounds);
    const VectorXd p = probe_point(param_bounds);
    const double t = horizon.t0;

    DynamicsJac jac;
    reset_jac(jac, state_dim, input_dim, param_dim);
    const VectorXd f = dynamics(x, u, p, t, &jac);
    if (f.size() != state_dim)
        throw validation_error("dynamics", "output size " + std::to_string(f.size()) +
                                               " != state_dim");
    if (jac.x.rows() != state_dim || jac.x.cols() != state_dim ||
        jac.u.rows() != state_dim || jac.u.cols() != input_dim ||
        jac.p.rows() != state_dim || jac.p.cols() != param_dim ||
        jac.t.size() != state_dim)
        throw validation_error("dynamics", "Jacobian shapes inconsistent with dimensions");

    auto probe_stage = [&](const StageFn& fn, const std::string& field) {
        StageGrad g;
        reset_grad(g, state_dim, input_dim, param_dim);
        (void)fn(x, u, p, t, &g);
        if (g.x.size() != state_dim || g.u.size() != input_dim || g.p.size() != param_dim)
            throw validation_error(field, "gradient sizes inconsistent with dimensions");
    };
    for (size_t i = 0; i < lagrange_terms.size(); ++i)
        probe_stage(lagrange_terms[i], "lagrange_terms[" + std::to_string(i) + "]");
    for (size_t i = 0; i < path_constraints.size(); ++i)
        probe_stage(path_constraints[i], "path_constraints[" + std::to_string(i) + "]");

    BoundaryArgs ba;
    ba.t0 = horizon.t0;
    ba.tf = horizon.free_tf ? horizon.tf_upper : horizon.tf;
    ba.x0 = x;
    ba.xf = x;
    ba.u0 = u;
    ba.uf = u;
    ba.p = p;
    auto probe_boundary = [&](const BoundaryFn& fn, const std::string& field) {
        BoundaryGrad g;
        reset_grad(g, state_dim, input_dim, param_dim);
        (void)fn(ba, &g);
        if (g.x0.size() != state_dim || g.xf.size() != state_dim ||
            g.u0.size() != input_dim || g.uf.size() != input_dim || g.p.size() != param_dim)
            throw validation_error(field, "gradient sizes inconsistent with dimensions");
    };
    for (size_t i = 0; i < mayer_terms.size(); ++i)
        probe_boundary(mayer_terms[i], "mayer_terms[" + std::to_string(i) + "]");
    for (size_t i = 0; i < boundary_inequalities.size(); ++i)
        probe_boundary(boundary_inequalities[i], "boundary_inequalities[" + std::to_string(i) + "]");
    for (size_t i = 0; i < boundary_equalities.size(); ++i)
        probe_boundary(boundary_equalities[i], "boundary_equalities[" + std::to_string(i) + "]");
}

void check_setpoint_weights(const MatrixXd& Q, const MatrixXd& R) {
    if (Q.rows() != Q.cols()) throw validation_error("Q", "must be square");
    if (R.rows() != R.cols()) throw validation_error("R", "must be square");
    const double qs = Q.size() ? (Q - Q.transpose()).cwiseAbs().maxCoeff() : 0.0;
    const double rs = R.size() ? (R - R.transpose()).cwiseAbs().maxCoeff() : 0.0;
    if (qs > 1e-10 * (1.0 + Q.cwiseAbs().maxCoeff()))
        throw validation_error("Q", "must be symmetric");
    if (rs > 1e-10 * (1.0 + R.cwiseAbs().maxCoeff()))
        throw validation_error("R", "must be symmetric");
    if (Q.size()) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
        if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + Q.cwiseAbs().maxCoeff()))
            throw validation_error("Q", "must be positive semidefinite");
    }
    if (R.size() == 0) throw validation_error("R", "must be non-empty");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw validation_error("R", "must be positive definite");
}

double setpoint_stage_cost(const VectorXd& e, const VectorXd& u, const MatrixXd& Q,
                           const MatrixXd& R, VectorXd* de, VectorXd* du) {
    if (Q.rows() != e.size() || Q.cols() != e.size())
        throw validation_error("Q", "dimension mismatch with error vector");
    if (R.rows() != u.size() || R.cols() != u.size())
        throw validation_error("R", "dimension mismatch with input vector");
    const VectorXd Qe = Q * e;
    const VectorXd Ru = R * u;
    if (de) *de = 2.0 * Qe;
    if (du) *du = 2.0 * Ru;
    return e.dot(Qe) + u.dot(Ru);
}

void Trajectory::check() const {
    const auto n = times.size();
    if (n < 2) throw validation_error("trajectory.times", "need at least two grid points");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(times[i] > times[i - 1]))
            throw validation_error("trajectory.times", "must be strictly increasing");
    if (states.rows() != n || inputs.rows() != n)
        throw validation_error("trajectory", "states/inputs rows must match times length");
    if (!times.allFinite() || !states.allFinite() || !inputs.allFinite() ||
        !params.allFinite())
        throw validation_error("trajectory", "all values must be finite");
}

}  // namespace rangetrack
