#pragma once

namespace dncs {

// Shared verdict for fixed-point value iterations. Hitting the iteration
// budget is deliberately distinct from divergence: near the critical drop
// probability convergence is arbitrarily slow, and only a trace blow-up
// licenses the "diverged" claim.
enum class SolveStatus {
  kConverged,
  kDiverged,
  kIterationLimit,
};

const char* to_string(SolveStatus status);

}  // namespace dncs
