#include "balrec/entropy_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "balrec/errors.hpp"

namespace balrec {

namespace {

void validate_block(const BalanceBlock& b, const char* name) {
    if (b.moments.empty()) throw ContractError(std::string("balance problem: empty block ") + name);
    if (!(b.mean_target > 0.0))
        throw ContractError(std::string("balance problem: mean_target must be > 0 in ") + name);
    for (double a : b.moments)
        if (!std::isfinite(a))
            throw ContractError(std::string("balance problem: non-finite moment in ") + name);
}

struct BlockEval {
    double moment;    // sum_j w_j a_j
    double slope;     // d moment / d nu = -budget * Var_softmax(a)
    double log_coef;  // ln A where w_j = A exp(-nu a_j)
};

// Weights for a block at a given nu: w_j = budget * softmax(-nu a)_j with
// budget = mean_target * n. Stabilized by shifting the exponent maximum.
BlockEval eval_block(const BalanceBlock& b, double nu, std::vector<double>* weights_out) {
    const std::size_t n = b.moments.size();
    const double budget = b.mean_target * static_cast<double>(n);
    double shift = -std::numeric_limits<double>::infinity();
    for (double a : b.moments) shift = std::max(shift, -nu * a);
    double zsum = 0.0, za = 0.0, zaa = 0.0;
    for (double a : b.moments) {
        const double z = std::exp(-nu * a - shift);
        zsum += z;
        za += z * a;
        zaa += z * a * a;
    }
    const double mean_a = za / zsum;
    const double var_a = std::max(0.0, zaa / zsum - mean_a * mean_a);
    if (weights_out) {
        weights_out->resize(n);
        for (std::size_t j = 0; j < n; ++j)
            (*weights_out)[j] = budget * std::exp(-nu * b.moments[j] - shift) / zsum;
    }
    return {budget * mean_a, -budget * var_a, std::log(budget) - shift - std::log(zsum)};
}

Interval block_interval(const BalanceBlock& b) {
    const auto [mn, mx] = std::minmax_element(b.moments.begin(), b.moments.end());
    const double budget = b.mean_target * static_cast<double>(b.moments.size());
    return {budget * *mn, budget * *mx};
}

}  // namespace

Interval achievable_interval(const BalanceProblem& p) {
    validate_block(p.primary, "primary");
    Interval iv = block_interval(p.primary);
    if (p.secondary) {
        validate_block(*p.secondary, "secondary");
        const Interval iv2 = block_interval(*p.secondary);
        iv.lo += iv2.lo;
        iv.hi += iv2.hi;
    }
    return iv;
}

DualSolution solve_entropy_balance(const BalanceProblem& p, double tol, int max_iterations) {
    const Interval iv = achievable_interval(p);
    const double c = p.moment_target;
    const double span = iv.hi - iv.lo;
    const double scale = std::max({1.0, std::abs(c), std::abs(iv.lo), std::abs(iv.hi)});

    auto moment_at = [&](double nu, DualSolution* sol) {
        BlockEval e1 = eval_block(p.primary, nu, sol ? &sol->weights : nullptr);
        double m = e1.moment, s = e1.slope;
        if (sol) {
            const double n1 = static_cast<double>(p.primary.moments.size());
            sol->mean_dual = -n1 * (1.0 + e1.log_coef);
        }
        if (p.secondary) {
            BlockEval e2 = eval_block(*p.secondary, nu, sol ? &sol->weights2 : nullptr);
            m += e2.moment;
            s += e2.slope;
            if (sol) {
                const double n2 = static_cast<double>(p.secondary->moments.size());
                sol->mean_dual2 = -n2 * (1.0 + e2.log_coef);
            }
        }
        return std::pair<double, double>{m, s};
    };

    DualSolution sol;

    // Degenerate case: every moment equal, the constraint is either vacuous or infeasible.
    if (span <= 1e-15 * scale) {
        if (std::abs(c - iv.lo) > tol * scale)
            throw FeasibilityError("balance problem infeasible: constant moments, achievable "
                                   "value " + std::to_string(iv.lo),
                                   iv.lo, iv.hi);
        sol.moment_dual = 0.0;
        moment_at(0.0, &sol);
        sol.kkt_residual = std::abs(c - iv.lo);
        return sol;
    }

    if (!(c > iv.lo && c < iv.hi))
        throw FeasibilityError("balance problem infeasible: moment_target outside the "
                               "achievable interval",
                               iv.lo, iv.hi);

    // Bracket: moment(nu) is strictly decreasing with limits (iv.hi, iv.lo).
    double lo = -1.0, hi = 1.0;
    while (moment_at(lo, nullptr).first < c) lo *= 2.0;
    while (moment_at(hi, nullptr).first > c) hi *= 2.0;

    double nu = 0.5 * (lo + hi);
    double h = 0.0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        auto [m, slope] = moment_at(nu, nullptr);
        h = m - c;
        if (std::abs(h) <= tol * scale) break;
        if (h > 0)
            lo = nu;  // need larger nu
        else
            hi = nu;
        double next = nu - h / slope;  // Newton
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (next == nu) break;  // bracket exhausted at machine precision
        nu = next;
    }
    if (std::abs(h) > tol * scale) {
        // allow machine-precision stagnation slightly above an extremely small tol
        if (std::abs(h) > 1e4 * std::numeric_limits<double>::epsilon() * scale)
            throw ConvergenceError("balance solver did not reach tolerance", std::abs(h));
    }

    sol.moment_dual = nu;
    auto [m, slope] = moment_at(nu, &sol);
    (void)slope;
    sol.iterations = it;

    // KKT residual: constraint violations plus stationarity of ln w + 1 + mu/n + nu a.
    double resid = std::abs(m - c) / scale;
    auto block_resid = [&](const BalanceBlock& b, const std::vector<double>& w, double mu) {
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(w.size());
        resid = std::max(resid, std::abs(mean - b.mean_target) / std::max(1.0, b.mean_target));
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double st = std::log(w[j]) + 1.0 + mu / static_cast<double>(w.size()) +
                              nu * b.moments[j];
            resid = std::max(resid, std::abs(st));
        }
    };
    block_resid(p.primary, sol.weights, sol.mean_dual);
    if (p.secondary) block_resid(*p.secondary, sol.weights2, sol.mean_dual2);
    sol.kkt_residual = resid;
    return sol;
}

BalanceProblem load_balance_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file: " + path);
    BalanceProblem p;
    BalanceBlock second;
    bool have_a = false, have_mean = false, have_moment = false, have_a2 = false,
         have_mean2 = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::replace(value.begin(), value.end(), ',', ' ');
        std::istringstream vs(value);
        auto parse_list = [&](std::vector<double>& out) {
            out.clear();
            double x;
            while (vs >> x) out.push_back(x);
            if (!vs.eof())
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number in list");
        };
        if (key == "a") {
            parse_list(p.primary.moments);
            have_a = true;
        } else if (key == "a2") {
            parse_list(second.moments);
            have_a2 = true;
        } else if (key == "mean_target") {
            vs >> p.primary.mean_target;
            have_mean = true;
        } else if (key == "mean_target2") {
            vs >> second.mean_target;
            have_mean2 = true;
        } else if (key == "moment_target") {
            vs >> p.moment_target;
            have_moment = true;
        } else {
            throw ParseError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (vs.fail() && key != "a" && key != "a2")
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad value");
    }
    if (!have_a || !have_mean || !have_moment)
        throw ParseError(path + ": need keys a, mean_target, moment_target");
    if (have_a2 != have_mean2)
        throw ParseError(path + ": second block needs both a2 and mean_target2");
    if (have_a2) p.secondary = std::move(second);
    return p;
}

}  // namespace balrec
