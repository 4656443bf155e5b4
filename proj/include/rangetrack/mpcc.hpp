#pragma once

#include "rangetrack/transcription.hpp"

namespace rangetrack {

/// Exact two-term minimum via an auxiliary variable:
///   min{l1, l2} = min over q in [-1, 0] of l1 + (l1 - l2) q.
/// The inner problem is linear in q, so the optimum sits at an endpoint.
double mpcc_min_value(double l1, double l2, double q);

struct MpccOptions {
    enum class Mode { RelaxedKkt, BilevelPenalty };

    double epsilon = 1e-4;  // complementarity relaxation bound
    Mode mode = Mode::RelaxedKkt;
    // BilevelPenalty only: extra objective weight on (l1 - l2) q, reinforcing
    // the inner minimization without KKT rows.
    double mu = 0.0;

    void check() const;
};

/// Replaces the team stage cost of a transcribed two-agent problem with the
/// complementarity form of min{l1, l2}.
///
/// Appends per-grid-point auxiliaries to the decision vector: q in [-1, 0]
/// and, in RelaxedKkt mode, inner-problem multipliers lam1, lam2 >= 0 with
///   stationarity (l1 - l2) - lam1 + lam2 = 0,
///   relaxed complementarity lam1 (1 + q) <= eps and lam2 (-q) <= eps.
/// The base problem must carry every objective term except the team range
/// cost; this adds the trapezoidal integral of l1 + (l1 - l2) q.
NlpProblem augment_transcription(const NlpProblem& base, StageFn l1, StageFn l2,
                                 const MpccOptions& opts);

/// Extends a base-layout guess with KKT-consistent auxiliaries: at each grid
/// point q, lam1, lam2 solve the inner problem for the guess's l1, l2 values
/// exactly, so complementarity starts satisfied.
VectorXd mpcc_extend_guess(const Layout& augmented_layout, const StageFn& l1,
                           const StageFn& l2, const MpccOptions& opts,
                           const VectorXd& base_guess);

}  // namespace rangetrack
