#pragma once

#include "rangetrack/range_costs.hpp"
#include "rangetrack/solver.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace rangetrack {

/// Ordered smoothing stages for warm-started continuation. Sharpness and
/// regularization weights may only increase from stage to stage.
struct SmoothingSchedule {
    std::vector<SmoothingParams> stages;
    // Optional per-stage overrides; empty, or one entry per stage.
    std::vector<SolverOptions> stage_options;

    void check() const;
};

/// A problem family: the same OCP transcribed under different smoothing
/// parameters. Every instantiation must share one decision-vector layout so
/// solutions can warm-start the next stage.
using OcpFamily = std::function<NlpProblem(const SmoothingParams&)>;

struct StageReport {
    SmoothingParams params;
    SolveStatus status = SolveStatus::Diverged;
    double objective = 0.0;
    double equality_residual = 0.0;
    double inequality_violation = 0.0;
    double stationarity = 0.0;
    // Violation measured at the warm-started guess before this stage's solve.
    double initial_violation = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double wall_time_seconds = 0.0;
};

struct HomotopyResult {
    std::optional<NlpSolution> final_solution;  // last completed stage
    std::vector<StageReport> reports;
    bool aborted = false;  // a stage diverged; reports cover completed stages + the failure
};

/// Solves the family along the schedule, chaining each stage's decision
/// vector, multipliers and penalty into the next. A diverged stage aborts
/// the run, retaining the reports gathered so far.
HomotopyResult run_homotopy(const OcpFamily& family, const SmoothingSchedule& schedule,
                            const VectorXd& initial_guess, const SolverOptions& base_opts);

}  // namespace rangetrack
