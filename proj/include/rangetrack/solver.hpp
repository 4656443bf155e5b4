#pragma once

#include "rangetrack/transcription.hpp"

#include <iosfwd>
#include <string>

namespace rangetrack {

struct SolverOptions {
    int max_outer_iterations = 40;
    int max_inner_iterations = 300;  // quasi-Newton steps per outer iteration
    double constraint_tolerance = 1e-6;
    double optimality_tolerance = 1e-6;
    double initial_penalty = 10.0;
    double penalty_growth_factor = 10.0;
    double max_penalty = 1e12;
    int history = 10;  // quasi-Newton memory length
    std::ostream* iteration_log = nullptr;  // one line per outer iteration

    void check() const;
};

enum class SolveStatus { Converged, MaxIterations, Diverged };

const char* to_string(SolveStatus s);

/// Multiplier and penalty state carried between solves. Re-solving from a
/// converged point with its warm start terminates in a few outer iterations;
/// homotopy stages chain these across smoothing changes.
struct WarmStart {
    VectorXd eq_multipliers;
    VectorXd ineq_multipliers;
    double penalty = 0.0;  // <= 0 selects SolverOptions::initial_penalty
};

struct NlpSolution {
    VectorXd z;
    double objective = 0.0;
    double equality_residual = 0.0;     // ||c(z)||_inf
    double inequality_violation = 0.0;  // ||max(g(z), 0)||_inf
    double stationarity = 0.0;          // ||P(z - grad L) - z||_inf
    VectorXd eq_multipliers;
    VectorXd ineq_multipliers;
    double penalty = 0.0;
    SolveStatus status = SolveStatus::Diverged;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double wall_time_seconds = 0.0;
    // False when the constraint violation grew between outer iterations after
    // the first penalty increase. Diagnostic only; the method does not
    // guarantee monotone feasibility.
    bool feasibility_monotone = true;
    std::string diagnostic;

    WarmStart warm_start() const { return {eq_multipliers, ineq_multipliers, penalty}; }
};

/// Solves min f(z) s.t. c(z)=0, g(z)<=0, lower<=z<=upper by an augmented
/// Lagrangian outer loop with a projected limited-memory quasi-Newton inner
/// minimizer. Deterministic: identical inputs produce identical iterates.
NlpSolution solve(const NlpProblem& nlp, const VectorXd& initial_guess,
                  const SolverOptions& opts, const WarmStart* warm = nullptr);

}  // namespace rangetrack
