#include "rangetrack/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace rangetrack {

void SolverOptions::check() const {
    if (max_outer_iterations < 1)
        throw validation_error("solver.max_outer_iterations", "must be >= 1");
    if (max_inner_iterations < 1)
        throw validation_error("solver.max_inner_iterations", "must be >= 1");
    if (!(constraint_tolerance > 0.0))
        throw validation_error("solver.constraint_tolerance", "must be > 0");
    if (!(optimality_tolerance > 0.0))
        throw validation_error("solver.optimality_tolerance", "must be > 0");
    if (!(initial_penalty > 0.0))
        throw validation_error("solver.initial_penalty", "must be > 0");
    if (!(penalty_growth_factor > 1.0))
        throw validation_error("solver.penalty_growth_factor", "must be > 1");
    if (!(max_penalty >= initial_penalty))
        throw validation_error("solver.max_penalty", "must be >= initial_penalty");
    if (history < 1) throw validation_error("solver.history", "must be >= 1");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max-iterations";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

namespace {

constexpr double kMultiplierCap = 1e10;

double inf_norm(const VectorXd& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

VectorXd project(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

// Augmented Lagrangian in the classic shifted-penalty form:
//   f + lambda'c + (mu/2)||c||^2 + (1/2mu) sum_i [max(0, nu_i + mu g_i)^2 - nu_i^2]
// Its gradient at an inner minimum equals the Lagrangian gradient taken at
// the first-order multiplier estimates lambda + mu c and max(0, nu + mu g).
struct AlEvaluator {
    const NlpProblem& nlp;
    VectorXd lambda, nu;
    double mu = 1.0;

    VectorXd c, g, grad_f, work;
    MatrixXd jac_c, jac_g;
    long evaluations = 0;

    explicit AlEvaluator(const NlpProblem& problem) : nlp(problem) {}

    double value(const VectorXd& z, VectorXd* grad) {
        ++evaluations;
        const double f = nlp.objective(z, grad ? &grad_f : nullptr);
        nlp.equalities(z, &c, grad ? &jac_c : nullptr);
        nlp.inequalities(z, &g, grad ? &jac_g : nullptr);
        double v = f;
        if (c.size()) v += lambda.dot(c) + 0.5 * mu * c.squaredNorm();
        if (g.size()) {
            work = (nu + mu * g).cwiseMax(0.0);
            v += (work.squaredNorm() - nu.squaredNorm()) / (2.0 * mu);
        }
        if (grad) {
            *grad = grad_f;
            if (c.size()) grad->noalias() += jac_c.transpose() * (lambda + mu * c);
            if (g.size()) grad->noalias() += jac_g.transpose() * work;
        }
        return v;
    }
};

struct InnerResult {
    double value = 0.0;
    double pg_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool start_finite = true;
};

// Projected-gradient L-BFGS with Armijo backtracking along the projected arc.
InnerResult minimize_box(AlEvaluator& ev, VectorXd& z, const VectorXd& lo,
                         const VectorXd& hi, double tol, int max_iter, int history) {
    InnerResult res;
    z = project(z, lo, hi);
    VectorXd grad(z.size());
    double val = ev.value(z, &grad);
    if (!std::isfinite(val) || !grad.allFinite()) {
        res.start_finite = false;
        return res;
    }
    struct Pair {
        VectorXd s, y;
        double sy;
    };
    std::deque<Pair> mem;
    auto pg_norm = [&] { return inf_norm(project(z - grad, lo, hi) - z); };
    res.pg_norm = pg_norm();

    VectorXd d, z_new, grad_new(z.size()), step;
    std::vector<double> alpha_buf;
    while (res.iterations < max_iter && res.pg_norm > tol) {
        ++res.iterations;
        // Two-loop recursion.
        d = -grad;
        if (!mem.empty()) {
            alpha_buf.resize(mem.size());
            for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
                alpha_buf[i] = mem[i].s.dot(d) / mem[i].sy;
                d -= alpha_buf[i] * mem[i].y;
            }
            d *= mem.back().sy / mem.back().y.squaredNorm();
            for (size_t i = 0; i < mem.size(); ++i) {
                const double beta = mem[i].y.dot(d) / mem[i].sy;
                d += (alpha_buf[i] - beta) * mem[i].s;
            }
        }
        if (!d.allFinite() || !(d.dot(grad) < 0.0)) d = -grad;

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double step_len = 1.0;
            for (int ls = 0; ls < 55; ++ls) {
                z_new = project(z + step_len * d, lo, hi);
                step = z_new - z;
                const double ip = grad.dot(step);
                if (inf_norm(step) == 0.0) break;
                if (ip < 0.0) {
                    const double trial = ev.value(z_new, nullptr);
                    if (std::isfinite(trial) && trial <= val + 1e-4 * ip) {
                        accepted = true;
                        break;
                    }
                }
                step_len *= 0.5;
            }
            if (!accepted && attempt == 0) d = -grad;
        }
        if (!accepted) break;

        const double val_new = ev.value(z_new, &grad_new);
        if (!std::isfinite(val_new) || !grad_new.allFinite()) break;
        const VectorXd s = z_new - z;
        const VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            mem.push_back({s, y, sy});
            if (static_cast<int>(mem.size()) > history) mem.pop_front();
        }
        z = z_new;
        val = val_new;
        grad.swap(grad_new);
        res.pg_norm = pg_norm();
    }
    res.value = val;
    return res;
}

}  // namespace

NlpSolution solve(const NlpProblem& nlp, const VectorXd& initial_guess,
                  const SolverOptions& opts, const WarmStart* warm) {
    opts.check();
    nlp.check();
    if (initial_guess.size() != nlp.decision_dim)
        throw validation_error("solve.initial_guess",
                               "length must equal nlp.decision_dim");
    const auto t_start = std::chrono::steady_clock::now();

    NlpSolution sol;
    AlEvaluator ev(nlp);
    ev.lambda = VectorXd::Zero(nlp.equality_count);
    ev.nu = VectorXd::Zero(nlp.inequality_count);
    ev.mu = opts.initial_penalty;
    if (warm) {
        if (warm->eq_multipliers.size() == nlp.equality_count && nlp.equality_count)
            ev.lambda = warm->eq_multipliers;
        if (warm->ineq_multipliers.size() == nlp.inequality_count && nlp.inequality_count)
            ev.nu = warm->ineq_multipliers.cwiseMax(0.0);
        if (warm->penalty > 0.0) ev.mu = std::min(warm->penalty, opts.max_penalty);
    }

    VectorXd z = project(initial_guess, nlp.lower, nlp.upper);

    auto finish = [&](SolveStatus status, std::string diagnostic) {
        sol.status = status;
        sol.diagnostic = std::move(diagnostic);
        sol.z = z;
        sol.objective = nlp.objective(z, nullptr);
        nlp.equalities(z, &ev.c, nullptr);
        nlp.inequalities(z, &ev.g, nullptr);
        sol.equality_residual = inf_norm(ev.c);
        sol.inequality_violation = ev.g.size() ? inf_norm(ev.g.cwiseMax(0.0)) : 0.0;
        sol.eq_multipliers = ev.lambda;
        sol.ineq_multipliers = ev.nu;
        sol.penalty = ev.mu;
        sol.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        return sol;
    };

    {
        const double f0 = nlp.objective(z, nullptr);
        nlp.equalities(z, &ev.c, nullptr);
        nlp.inequalities(z, &ev.g, nullptr);
        if (!std::isfinite(f0) || !ev.c.allFinite() || !ev.g.allFinite())
            return finish(SolveStatus::Diverged,
                          "non-finite objective or constraints at the initial guess");
    }

    double omega = std::max(opts.optimality_tolerance, 1e-2);  // inner tolerance
    double eta = 0.1;  // feasibility target for multiplier updates
    double viol_prev = std::numeric_limits<double>::infinity();
    bool penalty_increased = false;

    for (int outer = 1; outer <= opts.max_outer_iterations; ++outer) {
        sol.outer_iterations = outer;
        const InnerResult ir =
            minimize_box(ev, z, nlp.lower, nlp.upper, omega, opts.max_inner_iterations,
                         opts.history);
        sol.inner_iterations += ir.iterations;
        if (!ir.start_finite)
            return finish(SolveStatus::Diverged,
                          "non-finite augmented Lagrangian during outer iteration " +
                              std::to_string(outer));
        if (ir.value < -1e18)
            return finish(SolveStatus::Diverged, "objective appears unbounded below");

        nlp.equalities(z, &ev.c, nullptr);
        nlp.inequalities(z, &ev.g, nullptr);
        const double eq_res = inf_norm(ev.c);
        const double in_res = ev.g.size() ? inf_norm(ev.g.cwiseMax(0.0)) : 0.0;
        const double viol = std::max(eq_res, in_res);
        sol.stationarity = ir.pg_norm;

        if (opts.iteration_log)
            (*opts.iteration_log) << "outer " << outer << ": J=" << ir.value
                                  << " viol=" << viol << " stat=" << ir.pg_norm
                                  << " mu=" << ev.mu << " inner=" << ir.iterations
                                  << "\n";

        if (penalty_increased && viol > viol_prev * (1.0 + 1e-9) + 1e-12)
            sol.feasibility_monotone = false;

        if (viol <= opts.constraint_tolerance && ir.pg_norm <= opts.optimality_tolerance) {
            if (ev.c.size())
                ev.lambda =
                    (ev.lambda + ev.mu * ev.c).cwiseMax(-kMultiplierCap).cwiseMin(kMultiplierCap);
            if (ev.g.size())
                ev.nu = (ev.nu + ev.mu * ev.g).cwiseMax(0.0).cwiseMin(kMultiplierCap);
            return finish(SolveStatus::Converged, "");
        }

        if (viol <= std::max(opts.constraint_tolerance, eta) ||
            viol <= 0.25 * viol_prev) {
            if (ev.c.size())
                ev.lambda =
                    (ev.lambda + ev.mu * ev.c).cwiseMax(-kMultiplierCap).cwiseMin(kMultiplierCap);
            if (ev.g.size())
                ev.nu = (ev.nu + ev.mu * ev.g).cwiseMax(0.0).cwiseMin(kMultiplierCap);
            eta = std::max(opts.constraint_tolerance, eta * 0.2);
        } else {
            ev.mu = std::min(ev.mu * opts.penalty_growth_factor, opts.max_penalty);
            penalty_increased = true;
        }
        viol_prev = viol;
        omega = std::max(opts.optimality_tolerance, omega * 0.2);
        if (viol <= opts.constraint_tolerance) omega = opts.optimality_tolerance;
    }
    return finish(SolveStatus::MaxIterations,
                  "outer iteration limit reached before convergence");
}

}  // namespace rangetrack
