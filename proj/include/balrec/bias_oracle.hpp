#pragma once

#include <cstdint>

#include "balrec/estimators.hpp"
#include "balrec/synthetic.hpp"

namespace balrec {

enum class PropensitySource { true_prop, nominal, misspecified };

struct BiasReport {
    Family estimator = Family::ips;
    PropensitySource source = PropensitySource::nominal;
    double empirical_bias = 0.0;
    double analytic_bias = 0.0;  // conditional-on-world covariance term
    double standard_error = 0.0;
    double ideal_loss = 0.0;
    int replicates = 0;
};

// Resamples observation masks o ~ Bernoulli(p~), evaluates the estimator with
// the chosen propensity source against the known ideal loss (squared error of
// `theta`; a zero predictor when theta is null), and reports the mean bias with
// its standard error next to the closed-form covariance term. DR uses the
// perfect imputation e_hat = g = E[e | x] from the world.
//   analytic ips bias:  (1/|D|) sum e_j (p~_j - p^_j)/p^_j
//   analytic dr bias:   (1/|D|) sum (e_j - g_j)(p~_j - p^_j)/p^_j
//   analytic naive bias: sum p~ e / sum p~ - ideal (large-sample limit)
BiasReport monte_carlo_bias(const SyntheticWorld& world, Family estimator,
                            PropensitySource source, int replicates, std::uint64_t seed,
                            const FactorModel* theta = nullptr);

const char* propensity_source_name(PropensitySource s);

}  // namespace balrec
