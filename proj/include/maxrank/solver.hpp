#pragma once

#include "maxrank/grid.hpp"
#include "maxrank/operators.hpp"
#include "maxrank/verifier.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maxrank {

struct SolverConfig {
    double tol = 1e-10;
    int max_iter = 50;
    double backtrack = 0.5;
    double min_step = 1e-6;
    bool cone_safeguard = true;

    void validate() const;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residuals;     // max-norm, one per accepted iterate (start included)
    std::vector<double> cone_margins;  // min interior cone margin per accepted iterate
    std::vector<double> steps;         // accepted damping factor per Newton step
    double cone_margin = 0.0;
    std::string message;
};

/// (1-t) u0 + t u1 + M (t^2 - t), with M doubled from 1 until every interior
/// point is inside the ellipticity cone.
ScalarField initial_guess(const Problem& problem);

struct SolveResult {
    ScalarField u;
    SolveReport report;
};

/// Damped Newton iteration. Steps are backtracked until every interior point
/// stays in the cone (when the safeguard is on) and the residual max-norm
/// decreases. Non-convergence is reported, not thrown; a singular Jacobian
/// throws ErrorCode::Degenerate.
SolveResult newton_solve(const Problem& problem, const SolverConfig& config, const ScalarField& start);

/// Donaldson homotopy: at parameter s the right-hand side is s*eps + 2n(1-s)
/// and the boundary data are s*u0 + 1 - s and s*u1 + 2(1-s). s = 0 starts from
/// the exact solution 1 + t^2.
struct ContinuationStep {
    double s = 0.0;
    SolveReport report;
};

struct ContinuationResult {
    ScalarField u;
    std::vector<ContinuationStep> steps;
};

Problem homotopy_problem(const Problem& target, double s);

ContinuationResult continuation_s(const Problem& target, const std::vector<double>& schedule,
                                  const SolverConfig& config);

std::vector<double> uniform_schedule(int steps);

struct SweepEntry {
    double eps = 0.0;
    std::optional<ScalarField> u;
    SolveReport report;
    std::optional<RankReport> rank;
    std::string error;
};

/// Solves along a decreasing eps ladder, warm-starting each solve from the
/// previous solution and retrying from a fresh start on failure.
std::vector<SweepEntry> epsilon_sweep(const Problem& problem, const std::vector<double>& eps_list,
                                      const SolverConfig& config, const VerifyOptions& verify = {});

} // namespace maxrank
