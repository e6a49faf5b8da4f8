#include "balrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "balrec/errors.hpp"
#include "balrec/seeds.hpp"

namespace balrec {

FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> params, std::span<const double> analytic_grad, double step,
    std::uint64_t seed, std::size_t max_coords, double denom_floor) {
    if (params.size() != analytic_grad.size())
        throw ContractError("finite_diff_check: gradient size mismatch");
    if (!(step > 0.0)) throw ContractError("finite_diff_check: step must be > 0");

    std::vector<std::size_t> coords(params.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > max_coords) {
        auto rng = make_rng(seed, "gradcheck.coords");
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(max_coords);
    }

    std::vector<double> x(params.begin(), params.end());
    FiniteDiffReport report;
    report.coords_checked = coords.size();
    for (std::size_t k : coords) {
        const double saved = x[k];
        x[k] = saved + step;
        const double f_plus = objective(x);
        x[k] = saved - step;
        const double f_minus = objective(x);
        x[k] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
            throw NumericError("finite_diff_check: non-finite objective at coordinate " +
                               std::to_string(k));
        const double fd = (f_plus - f_minus) / (2.0 * step);
        const double denom = std::max({std::abs(fd), std::abs(analytic_grad[k]), denom_floor});
        const double err = std::abs(fd - analytic_grad[k]) / denom;
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_coordinate = k;
        }
    }
    return report;
}

}  // namespace balrec
