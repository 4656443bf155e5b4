#include "rangetrack/mpcc.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <utility>

namespace rangetrack {

double mpcc_min_value(double l1, double l2, double q) {
    if (!(q >= -1.0 && q <= 0.0))
        throw validation_error("mpcc.q", "must lie in [-1, 0]");
    return l1 + (l1 - l2) * q;
}

void MpccOptions::check() const {
    if (!(epsilon > 0.0)) throw validation_error("mpcc.epsilon", "must be > 0");
    if (!(mu >= 0.0)) throw validation_error("mpcc.mu", "must be >= 0");
}

namespace {

int q_index(const Layout& lay, int k) { return lay.aux_index(k); }
int lam1_index(const Layout& lay, int k) { return lay.aux_index(lay.points() + k); }
int lam2_index(const Layout& lay, int k) {
    return lay.aux_index(2 * lay.points() + k);
}

struct StagePoint {
    double t = 0.0;
    double weight = 0.0;  // trapezoidal quadrature weight (excluding h)
    VectorXd x, u;
};

StagePoint stage_point(const Layout& lay, const VectorXd& z, double h, int k) {
    StagePoint sp;
    sp.t = lay.t0 + h * k;
    sp.weight = (k == 0 || k == lay.intervals) ? 0.5 : 1.0;
    sp.x = z.segment(lay.state_index(k, 0), lay.state_dim);
    sp.u = z.segment(lay.input_index(k, 0), lay.input_dim);
    return sp;
}

}  // namespace

NlpProblem augment_transcription(const NlpProblem& base, StageFn l1, StageFn l2,
                                 const MpccOptions& opts) {
    base.check();
    opts.check();
    if (!l1 || !l2)
        throw validation_error("mpcc", "per-agent stage callbacks are required");
    if (base.layout.aux_dim != 0)
        throw validation_error("mpcc", "base problem already carries auxiliaries");

    const bool kkt = opts.mode == MpccOptions::Mode::RelaxedKkt;
    const int points = base.layout.points();
    const int base_dim = base.decision_dim;

    Layout lay = base.layout;
    lay.aux_dim = (kkt ? 3 : 1) * points;

    auto shared = std::make_shared<const NlpProblem>(base);
    const StageFn f1 = std::move(l1);
    const StageFn f2 = std::move(l2);
    const double coeff = 1.0 + (kkt ? 0.0 : opts.mu);

    NlpProblem out;
    out.layout = lay;
    out.decision_dim = lay.decision_dim();

    const int n = lay.state_dim, m = lay.input_dim, np = lay.param_dim;
    const int K = lay.intervals;

    out.objective = [shared, lay, f1, f2, coeff, base_dim, n, m, np, K](
                        const VectorXd& z, VectorXd* grad) {
        const VectorXd zb = z.head(base_dim);
        VectorXd gb;
        double J = shared->objective(zb, grad ? &gb : nullptr);
        if (grad) {
            grad->setZero(z.size());
            grad->head(base_dim) = gb;
        }
        const double tf = lay.final_time(z);
        const double h = (tf - lay.t0) / K;
        const VectorXd params = z.segment(lay.param_index(0), np);
        StageGrad s1, s2;
        for (int k = 0; k <= K; ++k) {
            const StagePoint sp = stage_point(lay, z, h, k);
            if (grad) {
                reset_grad(s1, n, m, np);
                reset_grad(s2, n, m, np);
            }
            const double v1 = f1(sp.x, sp.u, params, sp.t, grad ? &s1 : nullptr);
            const double v2 = f2(sp.x, sp.u, params, sp.t, grad ? &s2 : nullptr);
            const double q = z[q_index(lay, k)];
            const double term = v1 + coeff * (v1 - v2) * q;
            const double wh = sp.weight * h;
            J += wh * term;
            if (grad) {
                const double cq = coeff * q;
                grad->segment(lay.state_index(k, 0), n) +=
                    wh * (s1.x + cq * (s1.x - s2.x));
                grad->segment(lay.input_index(k, 0), m) +=
                    wh * (s1.u + cq * (s1.u - s2.u));
                if (np)
                    grad->segment(lay.param_index(0), np) +=
                        wh * (s1.p + cq * (s1.p - s2.p));
                (*grad)[q_index(lay, k)] += wh * coeff * (v1 - v2);
                if (lay.free_tf)
                    (*grad)[lay.tf_index()] +=
                        sp.weight * (term / K + h * (s1.t + cq * (s1.t - s2.t)) *
                                                    (static_cast<double>(k) / K));
            }
        }
        return J;
    };

    const int eq_rows = base.equality_count + (kkt ? points : 0);
    out.equality_count = eq_rows;
    out.equality_labels = base.equality_labels;
    if (kkt)
        for (int k = 0; k <= K; ++k)
            out.equality_labels.push_back("mpcc_stationarity[" + std::to_string(k) + "]");
    out.equalities = [shared, lay, f1, f2, kkt, base_dim, eq_rows, n, m, np, K](
                         const VectorXd& z, VectorXd* c, MatrixXd* jac) {
        const VectorXd zb = z.head(base_dim);
        VectorXd cb;
        MatrixXd jb;
        shared->equalities(zb, &cb, jac ? &jb : nullptr);
        c->resize(eq_rows);
        c->head(cb.size()) = cb;
        if (jac) {
            jac->setZero(eq_rows, lay.decision_dim());
            jac->topLeftCorner(cb.size(), base_dim) = jb;
        }
        if (!kkt) return;
        const double tf = lay.final_time(z);
        const double h = (tf - lay.t0) / K;
        const VectorXd params = z.segment(lay.param_index(0), np);
        StageGrad s1, s2;
        for (int k = 0; k <= K; ++k) {
            const StagePoint sp = stage_point(lay, z, h, k);
            if (jac) {
                reset_grad(s1, n, m, np);
                reset_grad(s2, n, m, np);
            }
            const double v1 = f1(sp.x, sp.u, params, sp.t, jac ? &s1 : nullptr);
            const double v2 = f2(sp.x, sp.u, params, sp.t, jac ? &s2 : nullptr);
            const int r = static_cast<int>(cb.size()) + k;
            (*c)[r] = (v1 - v2) - z[lam1_index(lay, k)] + z[lam2_index(lay, k)];
            if (jac) {
                jac->row(r).segment(lay.state_index(k, 0), n) = (s1.x - s2.x).transpose();
                jac->row(r).segment(lay.input_index(k, 0), m) = (s1.u - s2.u).transpose();
                if (np)
                    jac->row(r).segment(lay.param_index(0), np) =
                        (s1.p - s2.p).transpose();
                if (lay.free_tf)
                    (*jac)(r, lay.tf_index()) =
                        (s1.t - s2.t) * (static_cast<double>(k) / K);
                (*jac)(r, lam1_index(lay, k)) = -1.0;
                (*jac)(r, lam2_index(lay, k)) = 1.0;
            }
        }
    };

    const int ineq_rows = base.inequality_count + (kkt ? 2 * points : 0);
    out.inequality_count = ineq_rows;
    out.inequality_labels = base.inequality_labels;
    if (kkt)
        for (int k = 0; k <= K; ++k) {
            out.inequality_labels.push_back("mpcc_lam1_comp[" + std::to_string(k) + "]");
            out.inequality_labels.push_back("mpcc_lam2_comp[" + std::to_string(k) + "]");
        }
    const double eps = opts.epsilon;
    out.inequalities = [shared, lay, kkt, base_dim, ineq_rows, eps, K](
                           const VectorXd& z, VectorXd* g, MatrixXd* jac) {
        const VectorXd zb = z.head(base_dim);
        VectorXd gb;
        MatrixXd jb;
        shared->inequalities(zb, &gb, jac ? &jb : nullptr);
        g->resize(ineq_rows);
        g->head(gb.size()) = gb;
        if (jac) {
            jac->setZero(ineq_rows, lay.decision_dim());
            jac->topLeftCorner(gb.size(), base_dim) = jb;
        }
        if (!kkt) return;
        for (int k = 0; k <= K; ++k) {
            const double q = z[q_index(lay, k)];
            const double lam1 = z[lam1_index(lay, k)];
            const double lam2 = z[lam2_index(lay, k)];
            const int r1 = static_cast<int>(gb.size()) + 2 * k;
            const int r2 = r1 + 1;
            (*g)[r1] = lam1 * (1.0 + q) - eps;
            (*g)[r2] = lam2 * (-q) - eps;
            if (jac) {
                (*jac)(r1, lam1_index(lay, k)) = 1.0 + q;
                (*jac)(r1, q_index(lay, k)) = lam1;
                (*jac)(r2, lam2_index(lay, k)) = -q;
                (*jac)(r2, q_index(lay, k)) = -lam2;
            }
        }
    };

    out.lower = VectorXd::Zero(out.decision_dim);
    out.upper = VectorXd::Zero(out.decision_dim);
    out.lower.head(base_dim) = base.lower;
    out.upper.head(base_dim) = base.upper;
    for (int k = 0; k <= K; ++k) {
        out.lower[q_index(lay, k)] = -1.0;
        out.upper[q_index(lay, k)] = 0.0;
        if (kkt) {
            out.lower[lam1_index(lay, k)] = 0.0;
            out.upper[lam1_index(lay, k)] = std::numeric_limits<double>::infinity();
            out.lower[lam2_index(lay, k)] = 0.0;
            out.upper[lam2_index(lay, k)] = std::numeric_limits<double>::infinity();
        }
    }

    out.check();
    return out;
}

VectorXd mpcc_extend_guess(const Layout& augmented_layout, const StageFn& l1,
                           const StageFn& l2, const MpccOptions& opts,
                           const VectorXd& base_guess) {
    const Layout& lay = augmented_layout;
    const int base_dim = lay.decision_dim() - lay.aux_dim;
    if (base_guess.size() != base_dim)
        throw validation_error("mpcc.guess", "base guess length mismatch");
    const bool kkt = opts.mode == MpccOptions::Mode::RelaxedKkt;
    const int K = lay.intervals;

    VectorXd z = VectorXd::Zero(lay.decision_dim());
    z.head(base_dim) = base_guess;
    const double tf = lay.free_tf ? base_guess[lay.tf_index()] : lay.tf_fixed;
    const double h = (tf - lay.t0) / K;
    const VectorXd params = base_guess.segment(lay.param_index(0), lay.param_dim);
    for (int k = 0; k <= K; ++k) {
        const double t = lay.t0 + h * k;
        const VectorXd x = base_guess.segment(lay.state_index(k, 0), lay.state_dim);
        const VectorXd u = base_guess.segment(lay.input_index(k, 0), lay.input_dim);
        const double v1 = l1(x, u, params, t, nullptr);
        const double v2 = l2(x, u, params, t, nullptr);
        if (v1 <= v2) {
            z[q_index(lay, k)] = 0.0;
            if (kkt) z[lam2_index(lay, k)] = v2 - v1;
        } else {
            z[q_index(lay, k)] = -1.0;
            if (kkt) z[lam1_index(lay, k)] = v1 - v2;
        }
    }
    return z;
}

}  // namespace rangetrack
