#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dncs/simulation.hpp"
#include "dncs/system_spec.hpp"

namespace dncs {

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  double divergence_cap = 1e12;
  double rank_tol = 1e-8;
};

struct SimOptions {
  int runs = 200;
  int horizon = 5000;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::kStandardNormal;
  int record_every = 1;
  std::string trace_path;  // empty: no CSV
};

/**
 * One self-contained problem instance as read from a scenario file:
 * the plant/cost/link description plus solver and simulation options.
 */
struct Scenario {
  std::string name;
  DncsSpec spec;
  SolverOptions solver;
  SimOptions sim;
};

// Scenario file problems: parse errors and validation errors alike. The
// message names the offending field.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

/**
 * Builds a Scenario from a parsed JSON document:
 *   {
 *     "name": "...",
 *     "spec": {
 *       "n": N,
 *       "state_dims":  [d_X^1, .., d_X^N],
 *       "input_dims":  [d_U^0, d_U^1, .., d_U^N],
 *       "A":        [A^11, .., A^NN]      (row-major nested arrays),
 *       "B_local":  [B^11, .., B^NN],
 *       "B_remote": [B^10, .., B^N0],
 *       "Q": full state-cost matrix, "R": full input-cost matrix,
 *       "p": [p^1, .., p^N]
 *     },
 *     "solver": { "tol", "max_iter", "divergence_cap", "rank_tol" },
 *     "sim":    { "runs", "horizon", "seed", "noise", "record_every", "trace" }
 *   }
 * "solver" and "sim" are optional, as is every key inside them. Throws
 * ScenarioError naming the first offending field.
 */
Scenario scenario_from_json(const nlohmann::json& doc);

// Reads and validates a scenario file; ScenarioError on parse or validation
// problems, with the parse location when the JSON itself is malformed.
Scenario load_scenario(const std::string& path);

// Structured reports, one per command. Field order is fixed so serialized
// reports are byte-stable for identical inputs.
nlohmann::ordered_json analyze_report(const Scenario& scenario);
nlohmann::ordered_json solve_report(const Scenario& scenario);
nlohmann::ordered_json simulate_report(const Scenario& scenario);
nlohmann::ordered_json verify_report(const Scenario& scenario);
nlohmann::ordered_json finite_report(const Scenario& scenario, int horizon);

/**
 * Command-line entry point: analyze | solve | simulate | verify | finite.
 * Writes the JSON report to stdout (or --out) and a one-line summary to
 * stderr. Exit codes: 0 success, 1 usage, 2 input validation,
 * 3 infeasible / diverged / failed verification, 4 internal numeric failure.
 */
int run_cli(int argc, const char* const* argv);

}  // namespace dncs
