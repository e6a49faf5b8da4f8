#pragma once

#include <optional>
#include <string>
#include <vector>

namespace balrec {

// One block of a finite maximum-entropy problem: per-sample moment values and
// the required mean weight of the block.
struct BalanceBlock {
    std::vector<double> moments;
    double mean_target = 0.0;
};

// minimize  sum_blocks sum_j w_j ln w_j
// s.t.      mean(w) = mean_target per block,  w > 0,
//           sum_blocks sum_j w_j a_j = moment_target   (one shared constraint)
struct BalanceProblem {
    BalanceBlock primary;
    std::optional<BalanceBlock> secondary;
    double moment_target = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct DualSolution {
    std::vector<double> weights;    // primary block
    std::vector<double> weights2;   // secondary block, empty for one-block problems
    double mean_dual = 0.0;         // mu of the primary mean constraint
    double mean_dual2 = 0.0;        // mu of the secondary mean constraint
    double moment_dual = 0.0;       // nu of the shared moment constraint
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Open interval of moment targets reachable with positive weights.
Interval achievable_interval(const BalanceProblem& problem);

// KKT stationarity gives w_j = exp(-1 - mu/n - nu a_j) within each block; the
// mean constraint absorbs mu, leaving one monotone scalar dual nu, found by
// safeguarded Newton/bisection. Throws FeasibilityError when moment_target is
// outside the achievable interval, ConvergenceError when tol is not reached.
DualSolution solve_entropy_balance(const BalanceProblem& problem, double tol = 1e-12,
                                   int max_iterations = 200);

// Interchange format: "a = 1, 3", "mean_target = 0.5", "moment_target = 2.5",
// optional second block via "a2 = ..." and "mean_target2 = ...".
BalanceProblem load_balance_problem(const std::string& path);

}  // namespace balrec
