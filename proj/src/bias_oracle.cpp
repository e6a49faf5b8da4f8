#include "balrec/bias_oracle.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "balrec/errors.hpp"
#include "balrec/seeds.hpp"

namespace balrec {

BiasReport monte_carlo_bias(const SyntheticWorld& world, Family estimator,
                            PropensitySource source, int replicates, std::uint64_t seed,
                            const FactorModel* theta) {
    if (replicates < 100) throw ContractError("monte_carlo_bias: need replicates >= 100");
    if (estimator != Family::naive && estimator != Family::ips && estimator != Family::dr)
        throw ContractError("monte_carlo_bias: estimator must be naive, ips or dr");

    const std::size_t n = world.pair_count();
    std::vector<double> err(n), pred(n);
    for (int u = 0; u < world.num_users; ++u)
        for (int i = 0; i < world.num_items; ++i) {
            const std::size_t k = world.idx(u, i);
            pred[k] = theta ? theta->score(u, i) : 0.0;
            const double d = pred[k] - world.full_rating[k];
            err[k] = d * d;
        }

    double mean_true_prop = 0.0;
    for (double p : world.true_propensity) mean_true_prop += p;
    mean_true_prop /= static_cast<double>(n);

    std::vector<double> phat(n);
    for (std::size_t k = 0; k < n; ++k) {
        switch (source) {
            case PropensitySource::true_prop: phat[k] = world.true_propensity[k]; break;
            case PropensitySource::nominal: phat[k] = world.nominal_propensity[k]; break;
            case PropensitySource::misspecified: phat[k] = mean_true_prop; break;
        }
    }

    std::vector<double> g(n, 0.0);
    if (estimator == Family::dr)
        for (std::size_t k = 0; k < n; ++k) g[k] = world.conditional_sq_error_mean(pred[k], k);

    double ideal = 0.0;
    for (double e : err) ideal += e;
    ideal /= static_cast<double>(n);

    BiasReport report;
    report.estimator = estimator;
    report.source = source;
    report.replicates = replicates;
    report.ideal_loss = ideal;

    // Conditional-on-world closed form.
    double analytic = 0.0;
    if (estimator == Family::naive) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            num += world.true_propensity[k] * err[k];
            den += world.true_propensity[k];
        }
        analytic = num / den - ideal;
    } else {
        for (std::size_t k = 0; k < n; ++k)
            analytic += (err[k] - g[k]) * (world.true_propensity[k] - phat[k]) / phat[k];
        analytic /= static_cast<double>(n);
    }
    report.analytic_bias = analytic;

    // Replicates are independent streams derived from the master seed, so they
    // could be evaluated in parallel; the reduction order is fixed either way.
    std::vector<double> biases;
    biases.reserve(replicates);
    for (int rep = 0; rep < replicates; ++rep) {
        auto rng = make_rng(derive_seed(seed, "mc.replicate") + static_cast<std::uint64_t>(rep),
                            "mc.mask");
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double acc = 0.0;
        long long observed = 0;
        double naive_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const bool o = unif(rng) < world.true_propensity[k];
            switch (estimator) {
                case Family::naive:
                    if (o) {
                        naive_sum += err[k];
                        ++observed;
                    }
                    break;
                case Family::ips:
                    if (o) acc += err[k] / phat[k];
                    break;
                case Family::dr:
                    acc += g[k];
                    if (o) acc += (err[k] - g[k]) / phat[k];
                    break;
                default: break;
            }
        }
        double value;
        if (estimator == Family::naive) {
            if (observed == 0) continue;  // no observations this draw; skip
            value = naive_sum / static_cast<double>(observed);
        } else {
            value = acc / static_cast<double>(n);
        }
        biases.push_back(value - ideal);
    }
    if (biases.size() < 2) throw NumericError("monte_carlo_bias: too few valid replicates");

    double mean = 0.0;
    for (double b : biases) mean += b;
    mean /= static_cast<double>(biases.size());
    double var = 0.0;
    for (double b : biases) var += (b - mean) * (b - mean);
    var /= static_cast<double>(biases.size() - 1);
    report.empirical_bias = mean;
    report.standard_error = std::sqrt(var / static_cast<double>(biases.size()));
    report.replicates = static_cast<int>(biases.size());
    return report;
}

const char* propensity_source_name(PropensitySource s) {
    switch (s) {
        case PropensitySource::true_prop: return "true";
        case PropensitySource::nominal: return "nominal";
        case PropensitySource::misspecified: return "misspecified";
    }
    return "?";
}

}  // namespace balrec
