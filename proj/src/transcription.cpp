#include "rangetrack/transcription.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace rangetrack {

void Mesh::check() const {
    if (interval_count < 2)
        throw validation_error("mesh.interval_count", "need at least 2 intervals");
}

VectorXd Layout::encode(const Trajectory& traj) const {
    if (traj.states.rows() != points() || traj.states.cols() != state_dim ||
        traj.inputs.rows() != points() || traj.inputs.cols() != input_dim ||
        traj.params.size() != param_dim)
        throw validation_error("layout.encode", "trajectory shape does not match layout");
    VectorXd z = VectorXd::Zero(decision_dim());
    for (int k = 0; k < points(); ++k) {
        for (int i = 0; i < state_dim; ++i) z[state_index(k, i)] = traj.states(k, i);
        for (int j = 0; j < input_dim; ++j) z[input_index(k, j)] = traj.inputs(k, j);
    }
    for (int i = 0; i < param_dim; ++i) z[param_index(i)] = traj.params[i];
    if (free_tf) z[tf_index()] = traj.times[traj.times.size() - 1];
    return z;
}

Trajectory Layout::decode(const VectorXd& z) const {
    if (z.size() != decision_dim())
        throw validation_error("layout.decode",
                               "decision vector length " + std::to_string(z.size()) +
                                   " != " + std::to_string(decision_dim()));
    const double tf = final_time(z);
    const double h = (tf - t0) / intervals;
    Trajectory traj;
    traj.times.resize(points());
    traj.states.resize(points(), state_dim);
    traj.inputs.resize(points(), input_dim);
    traj.params.resize(param_dim);
    for (int k = 0; k < points(); ++k) {
        traj.times[k] = t0 + h * k;
        for (int i = 0; i < state_dim; ++i) traj.states(k, i) = z[state_index(k, i)];
        for (int j = 0; j < input_dim; ++j) traj.inputs(k, j) = z[input_index(k, j)];
    }
    for (int i = 0; i < param_dim; ++i) traj.params[i] = z[param_index(i)];
    return traj;
}

void NlpProblem::check() const {
    if (decision_dim <= 0) throw validation_error("nlp.decision_dim", "must be positive");
    if (!objective) throw validation_error("nlp.objective", "callback is required");
    if (!equalities || !inequalities)
        throw validation_error("nlp.constraints", "constraint callbacks are required");
    if (lower.size() != decision_dim || upper.size() != decision_dim)
        throw validation_error("nlp.bounds", "bound length must equal decision_dim");
    if (static_cast<int>(equality_labels.size()) != equality_count ||
        static_cast<int>(inequality_labels.size()) != inequality_count)
        throw validation_error("nlp.labels", "label counts must match constraint counts");
    if (layout.decision_dim() != decision_dim)
        throw validation_error("nlp.layout", "layout does not cover the decision vector");
}

namespace {

struct GridEval {
    double tf = 0.0;
    double h = 0.0;
    VectorXd params;
};

GridEval grid_eval(const Layout& lay, const VectorXd& z) {
    GridEval ge;
    ge.tf = lay.final_time(z);
    ge.h = (ge.tf - lay.t0) / lay.intervals;
    ge.params = z.segment(lay.param_index(0), lay.param_dim);
    return ge;
}

BoundaryArgs boundary_args(const Layout& lay, const VectorXd& z, const GridEval& ge) {
    BoundaryArgs ba;
    ba.t0 = lay.t0;
    ba.tf = ge.tf;
    ba.x0 = z.segment(lay.state_index(0, 0), lay.state_dim);
    ba.xf = z.segment(lay.state_index(lay.intervals, 0), lay.state_dim);
    ba.u0 = z.segment(lay.input_index(0, 0), lay.input_dim);
    ba.uf = z.segment(lay.input_index(lay.intervals, 0), lay.input_dim);
    ba.p = ge.params;
    return ba;
}

void scatter_boundary_grad(const Layout& lay, const BoundaryGrad& bg, double scale,
                           MatrixXd& jac, int r) {
    const int n = lay.state_dim, m = lay.input_dim;
    jac.row(r).segment(lay.state_index(0, 0), n) += scale * bg.x0.transpose();
    jac.row(r).segment(lay.state_index(lay.intervals, 0), n) += scale * bg.xf.transpose();
    jac.row(r).segment(lay.input_index(0, 0), m) += scale * bg.u0.transpose();
    jac.row(r).segment(lay.input_index(lay.intervals, 0), m) += scale * bg.uf.transpose();
    if (lay.param_dim)
        jac.row(r).segment(lay.param_index(0), lay.param_dim) += scale * bg.p.transpose();
    if (lay.free_tf) jac(r, lay.tf_index()) += scale * bg.tf;
}

}  // namespace

NlpProblem transcribe(const OcpSpec& ocp, const Mesh& mesh) {
    ocp.check();
    mesh.check();

    auto spec = std::make_shared<const OcpSpec>(ocp);
    const int K = mesh.interval_count;
    const int n = spec->state_dim, m = spec->input_dim, p = spec->param_dim;

    Layout lay;
    lay.state_dim = n;
    lay.input_dim = m;
    lay.param_dim = p;
    lay.intervals = K;
    lay.free_tf = spec->horizon.free_tf;
    lay.t0 = spec->horizon.t0;
    lay.tf_fixed = spec->horizon.tf;

    NlpProblem nlp;
    nlp.layout = lay;
    nlp.decision_dim = lay.decision_dim();

    nlp.objective = [spec, lay, K, n, m, p](const VectorXd& z, VectorXd* grad) {
        const GridEval ge = grid_eval(lay, z);
        if (grad) grad->setZero(z.size());
        double J = 0.0;
        StageGrad sg;
        for (int k = 0; k <= K; ++k) {
            const double w = (k == 0 || k == K) ? 0.5 : 1.0;
            const double t = lay.t0 + ge.h * k;
            const auto x = z.segment(lay.state_index(k, 0), n);
            const auto u = z.segment(lay.input_index(k, 0), m);
            for (const auto& L : spec->lagrange_terms) {
                if (grad) reset_grad(sg, n, m, p);
                const double Lk = L(x, u, ge.params, t, grad ? &sg : nullptr);
                J += w * ge.h * Lk;
                if (grad) {
                    grad->segment(lay.state_index(k, 0), n) += w * ge.h * sg.x;
                    grad->segment(lay.input_index(k, 0), m) += w * ge.h * sg.u;
                    if (p) grad->segment(lay.param_index(0), p) += w * ge.h * sg.p;
                    if (lay.free_tf)
                        (*grad)[lay.tf_index()] +=
                            w * (Lk / K + ge.h * sg.t * (static_cast<double>(k) / K));
                }
            }
        }
        J += spec->duration_weight * (ge.tf - lay.t0);
        if (grad && lay.free_tf) (*grad)[lay.tf_index()] += spec->duration_weight;
        if (!spec->mayer_terms.empty()) {
            const BoundaryArgs ba = boundary_args(lay, z, ge);
            BoundaryGrad bg;
            for (const auto& phi : spec->mayer_terms) {
                if (grad) reset_grad(bg, n, m, p);
                J += phi(ba, grad ? &bg : nullptr);
                if (grad) {
                    grad->segment(lay.state_index(0, 0), n) += bg.x0;
                    grad->segment(lay.state_index(K, 0), n) += bg.xf;
                    grad->segment(lay.input_index(0, 0), m) += bg.u0;
                    grad->segment(lay.input_index(K, 0), m) += bg.uf;
                    if (p) grad->segment(lay.param_index(0), p) += bg.p;
                    if (lay.free_tf) (*grad)[lay.tf_index()] += bg.tf;
                }
            }
        }
        return J;
    };

    const int defect_rows = K * n;
    const int eq_rows = defect_rows + static_cast<int>(spec->boundary_equalities.size());
    nlp.equality_count = eq_rows;
    nlp.equalities = [spec, lay, K, n, m, p, defect_rows, eq_rows](
                         const VectorXd& z, VectorXd* c, MatrixXd* jac) {
        const GridEval ge = grid_eval(lay, z);
        c->resize(eq_rows);
        if (jac) jac->setZero(eq_rows, lay.decision_dim());

        std::vector<VectorXd> f(K + 1);
        std::vector<DynamicsJac> fj(jac ? K + 1 : 0);
        for (int k = 0; k <= K; ++k) {
            const double t = lay.t0 + ge.h * k;
            const auto x = z.segment(lay.state_index(k, 0), n);
            const auto u = z.segment(lay.input_index(k, 0), m);
            if (jac) reset_jac(fj[k], n, m, p);
            f[k] = spec->dynamics(x, u, ge.params, t, jac ? &fj[k] : nullptr);
        }
        const double half_h = 0.5 * ge.h;
        for (int k = 0; k < K; ++k) {
            const auto xk = z.segment(lay.state_index(k, 0), n);
            const auto xk1 = z.segment(lay.state_index(k + 1, 0), n);
            c->segment(k * n, n) = xk1 - xk - half_h * (f[k] + f[k + 1]);
            if (jac) {
                auto block_x0 = jac->block(k * n, lay.state_index(k, 0), n, n);
                block_x0 = -half_h * fj[k].x;
                block_x0.diagonal().array() -= 1.0;
                auto block_x1 = jac->block(k * n, lay.state_index(k + 1, 0), n, n);
                block_x1 = -half_h * fj[k + 1].x;
                block_x1.diagonal().array() += 1.0;
                jac->block(k * n, lay.input_index(k, 0), n, m) = -half_h * fj[k].u;
                jac->block(k * n, lay.input_index(k + 1, 0), n, m) = -half_h * fj[k + 1].u;
                if (p)
                    jac->block(k * n, lay.param_index(0), n, p) =
                        -half_h * (fj[k].p + fj[k + 1].p);
                if (lay.free_tf)
                    jac->col(lay.tf_index()).segment(k * n, n) =
                        -(0.5 / K) * (f[k] + f[k + 1]) -
                        half_h * ((static_cast<double>(k) / K) * fj[k].t +
                                  (static_cast<double>(k + 1) / K) * fj[k + 1].t);
            }
        }
        if (!spec->boundary_equalities.empty()) {
            const BoundaryArgs ba = boundary_args(lay, z, ge);
            BoundaryGrad bg;
            int r = defect_rows;
            for (const auto& be : spec->boundary_equalities) {
                if (jac) reset_grad(bg, n, m, p);
                (*c)[r] = be(ba, jac ? &bg : nullptr);
                if (jac) scatter_boundary_grad(lay, bg, 1.0, *jac, r);
                ++r;
            }
        }
    };
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i)
            nlp.equality_labels.push_back("defect[" + std::to_string(k) + "].state[" +
                                          std::to_string(i) + "]");
    for (size_t i = 0; i < spec->boundary_equalities.size(); ++i)
        nlp.equality_labels.push_back("boundary_eq[" + std::to_string(i) + "]");

    const int path_terms = static_cast<int>(spec->path_constraints.size());
    const int ineq_rows =
        path_terms * (K + 1) + static_cast<int>(spec->boundary_inequalities.size());
    nlp.inequality_count = ineq_rows;
    nlp.inequalities = [spec, lay, K, n, m, p, path_terms, ineq_rows](
                           const VectorXd& z, VectorXd* g, MatrixXd* jac) {
        const GridEval ge = grid_eval(lay, z);
        g->resize(ineq_rows);
        if (jac) jac->setZero(ineq_rows, lay.decision_dim());
        StageGrad sg;
        for (int j = 0; j < path_terms; ++j) {
            for (int k = 0; k <= K; ++k) {
                const double t = lay.t0 + ge.h * k;
                const auto x = z.segment(lay.state_index(k, 0), n);
                const auto u = z.segment(lay.input_index(k, 0), m);
                const int r = j * (K + 1) + k;
                if (jac) reset_grad(sg, n, m, p);
                (*g)[r] = spec->path_constraints[j](x, u, ge.params, t, jac ? &sg : nullptr);
                if (jac) {
                    jac->row(r).segment(lay.state_index(k, 0), n) = sg.x.transpose();
                    jac->row(r).segment(lay.input_index(k, 0), m) = sg.u.transpose();
                    if (p) jac->row(r).segment(lay.param_index(0), p) = sg.p.transpose();
                    if (lay.free_tf)
                        (*jac)(r, lay.tf_index()) = sg.t * (static_cast<double>(k) / K);
                }
            }
        }
        if (!spec->boundary_inequalities.empty()) {
            const BoundaryArgs ba = boundary_args(lay, z, ge);
            BoundaryGrad bg;
            int r = path_terms * (K + 1);
            for (const auto& bi : spec->boundary_inequalities) {
                if (jac) reset_grad(bg, n, m, p);
                (*g)[r] = bi(ba, jac ? &bg : nullptr);
                if (jac) scatter_boundary_grad(lay, bg, 1.0, *jac, r);
                ++r;
            }
        }
    };
    for (int j = 0; j < path_terms; ++j)
        for (int k = 0; k <= K; ++k)
            nlp.inequality_labels.push_back("path[" + std::to_string(j) + "][" +
                                            std::to_string(k) + "]");
    for (size_t i = 0; i < spec->boundary_inequalities.size(); ++i)
        nlp.inequality_labels.push_back("boundary_ineq[" + std::to_string(i) + "]");

    nlp.lower = VectorXd::Zero(nlp.decision_dim);
    nlp.upper = VectorXd::Zero(nlp.decision_dim);
    for (int k = 0; k <= K; ++k) {
        const Bounds& sb = (k == 0)   ? spec->effective_initial_bounds()
                           : (k == K) ? spec->effective_final_bounds()
                                      : spec->state_bounds;
        for (int i = 0; i < n; ++i) {
            nlp.lower[lay.state_index(k, i)] = sb.lower[i];
            nlp.upper[lay.state_index(k, i)] = sb.upper[i];
        }
        for (int j = 0; j < m; ++j) {
            nlp.lower[lay.input_index(k, j)] = spec->input_bounds.lower[j];
            nlp.upper[lay.input_index(k, j)] = spec->input_bounds.upper[j];
        }
    }
    for (int i = 0; i < p; ++i) {
        nlp.lower[lay.param_index(i)] = spec->param_bounds.lower[i];
        nlp.upper[lay.param_index(i)] = spec->param_bounds.upper[i];
    }
    if (lay.free_tf) {
        nlp.lower[lay.tf_index()] = spec->horizon.tf_lower;
        nlp.upper[lay.tf_index()] = spec->horizon.tf_upper;
    }

    nlp.check();
    return nlp;
}

}  // namespace rangetrack
