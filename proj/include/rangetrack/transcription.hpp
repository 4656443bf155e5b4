#pragma once

#include "rangetrack/ocp.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rangetrack {

/// Uniform time grid with K intervals (K+1 grid points) over normalized
/// time tau in [0, 1].
struct Mesh {
    int interval_count = 100;
    void check() const;
};

/// Maps (grid point, component) pairs to decision-vector indices.
/// Ordering: all grid states, then all grid inputs, then static params, then
/// t_f when free, then any appended auxiliary variables.
struct Layout {
    int state_dim = 0;
    int input_dim = 0;
    int param_dim = 0;
    int intervals = 0;  // K; grid points are 0..K
    bool free_tf = false;
    double t0 = 0.0;
    double tf_fixed = 0.0;  // horizon end when free_tf is false
    int aux_dim = 0;

    int points() const { return intervals + 1; }
    int state_index(int k, int i) const { return k * state_dim + i; }
    int input_index(int k, int j) const {
        return points() * state_dim + k * input_dim + j;
    }
    int param_index(int i) const {
        return points() * (state_dim + input_dim) + i;
    }
    int tf_index() const {
        return points() * (state_dim + input_dim) + param_dim;
    }
    int aux_index(int i) const {
        return points() * (state_dim + input_dim) + param_dim + (free_tf ? 1 : 0) + i;
    }
    int decision_dim() const { return aux_index(0) + aux_dim; }

    double final_time(const VectorXd& z) const {
        return free_tf ? z[tf_index()] : tf_fixed;
    }

    VectorXd encode(const Trajectory& traj) const;
    Trajectory decode(const VectorXd& z) const;
};

/// Finite-dimensional program
///   min f(z)  s.t.  c(z) = 0,  g(z) <= 0,  lower <= z <= upper.
/// Callbacks overwrite their output arguments; passing a null Jacobian or
/// gradient pointer skips derivative work. Row labels identify constraints in
/// diagnostics and gradient-check reports.
struct NlpProblem {
    int decision_dim = 0;
    int equality_count = 0;
    int inequality_count = 0;
    std::function<double(const VectorXd& z, VectorXd* grad)> objective;
    std::function<void(const VectorXd& z, VectorXd* c, MatrixXd* jac)> equalities;
    std::function<void(const VectorXd& z, VectorXd* g, MatrixXd* jac)> inequalities;
    VectorXd lower, upper;
    std::vector<std::string> equality_labels;
    std::vector<std::string> inequality_labels;
    Layout layout;

    void check() const;
};

/// Direct trapezoidal collocation. Defect equalities
///   x_{k+1} - x_k - (h/2)(f_k + f_{k+1}) = 0,  h = (t_f - t_0)/K,
/// tie adjacent grid states to the dynamics; Lagrange terms are integrated by
/// the trapezoidal rule; path constraints are enforced at every grid point.
/// When the horizon end is free, t_f joins the decision vector and h becomes
/// decision-dependent.
NlpProblem transcribe(const OcpSpec& ocp, const Mesh& mesh);

}  // namespace rangetrack
