#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace balrec {

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    std::size_t worst_coordinate = 0;
    std::size_t coords_checked = 0;
};

// Central finite differences of `objective` against `analytic_grad` on a random
// subset of at most max_coords coordinates. Per-coordinate relative error uses
// denominator max(|fd|, |analytic|, denom_floor) so near-zero gradients are
// compared absolutely against the floor.
FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> params, std::span<const double> analytic_grad, double step,
    std::uint64_t seed, std::size_t max_coords = 200, double denom_floor = 1e-6);

}  // namespace balrec
