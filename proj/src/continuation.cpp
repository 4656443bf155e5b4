#include "rangetrack/continuation.hpp"

#include <string>

namespace rangetrack {

void SmoothingSchedule::check() const {
    if (stages.empty())
        throw validation_error("schedule.stages", "must contain at least one stage");
    for (size_t i = 0; i < stages.size(); ++i) {
        stages[i].check();
        if (i == 0) continue;
        const auto& prev = stages[i - 1];
        const auto& cur = stages[i];
        const std::string at = "schedule.stages[" + std::to_string(i) + "]";
        if (cur.k1 < prev.k1)
            throw validation_error(at, "k1 must be non-decreasing across stages");
        if (cur.k2 < prev.k2)
            throw validation_error(at, "k2 must be non-decreasing across stages");
        if (cur.rho < prev.rho)
            throw validation_error(at, "rho must be non-decreasing across stages");
        if (cur.regularizer != prev.regularizer)
            throw validation_error(at, "regularizer kind must not change across stages");
    }
    if (!stage_options.empty() && stage_options.size() != stages.size())
        throw validation_error("schedule.stage_options",
                               "must be empty or match the stage count");
    for (const auto& so : stage_options) so.check();
}

HomotopyResult run_homotopy(const OcpFamily& family, const SmoothingSchedule& schedule,
                            const VectorXd& initial_guess,
                            const SolverOptions& base_opts) {
    schedule.check();
    base_opts.check();

    HomotopyResult result;
    VectorXd z = initial_guess;
    WarmStart warm;
    bool have_warm = false;

    for (size_t i = 0; i < schedule.stages.size(); ++i) {
        const SmoothingParams& params = schedule.stages[i];
        const SolverOptions& opts =
            schedule.stage_options.empty() ? base_opts : schedule.stage_options[i];

        NlpProblem nlp = family(params);
        if (nlp.decision_dim != z.size())
            throw validation_error("homotopy.family",
                                   "stage " + std::to_string(i) +
                                       " changed the decision dimension");

        StageReport report;
        report.params = params;
        {
            VectorXd c, g;
            const VectorXd zp = z.cwiseMax(nlp.lower).cwiseMin(nlp.upper);
            nlp.equalities(zp, &c, nullptr);
            nlp.inequalities(zp, &g, nullptr);
            const double eq = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
            const double in = g.size() ? g.cwiseMax(0.0).maxCoeff() : 0.0;
            report.initial_violation = std::max(eq, in);
        }

        const NlpSolution sol = solve(nlp, z, opts, have_warm ? &warm : nullptr);
        report.status = sol.status;
        report.objective = sol.objective;
        report.equality_residual = sol.equality_residual;
        report.inequality_violation = sol.inequality_violation;
        report.stationarity = sol.stationarity;
        report.outer_iterations = sol.outer_iterations;
        report.inner_iterations = sol.inner_iterations;
        report.wall_time_seconds = sol.wall_time_seconds;
        result.reports.push_back(report);

        if (sol.status == SolveStatus::Diverged) {
            result.aborted = true;
            return result;
        }
        z = sol.z;
        warm = sol.warm_start();
        have_warm = true;
        result.final_solution = sol;
    }
    return result;
}

}  // namespace rangetrack
