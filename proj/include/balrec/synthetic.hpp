#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "balrec/table.hpp"

namespace balrec {

enum class PropensityFamily { constant, preference };

// Generative model with a hidden per-pair confounder h:
//   clean score   z(x)   low-rank in user/item latents
//   rating        r = z + confound_strength * h + noise,  h ~ Rademacher(+-1)
//   log-odds p~   logit(base rate [+ tilt * z~]) + confound_strength * h
// confound_strength = 0 makes p~ = p and decorrelates errors from observation.
struct SyntheticConfig {
    int num_users = 40;
    int num_items = 50;
    int latent_dim = 4;
    double confound_strength = 0.0;
    double rating_noise = 0.5;
    PropensityFamily family = PropensityFamily::preference;
    double base_obs_rate = 0.1;
    double propensity_tilt = 1.0;  // slope on the standardized clean score
    double propensity_min = 0.005; // generation error if p~ leaves [min, 1-min]
    int uniform_per_user = 8;
    bool quantize = false;         // snap ratings onto the 1..5 integer scale
    double quantize_center = 3.0;
    double quantize_scale = 1.0;
    double embed_scale = 0.6;
    double bias_scale = 0.3;
};

// Fully known ground truth for oracle experiments. The confounder law is kept
// so conditional error means g(x) = E[e | x] stay in closed form.
struct SyntheticWorld {
    int num_users = 0;
    int num_items = 0;
    double confound_strength = 0.0;
    double rating_noise = 0.0;
    bool quantized = false;
    double h_mean = 0.0;  // law of the confounder
    double h_var = 1.0;
    double rating_confound_coef = 0.0;  // coefficient of h in the rating

    std::vector<double> confounder;         // realized h per pair
    std::vector<double> true_propensity;    // p~ = Pr(o=1 | x, h)
    std::vector<double> nominal_propensity; // p = E[p~ | x], exact marginal over h
    std::vector<double> clean_rating;       // E[r | x] minus the confounder term
    std::vector<double> full_rating;        // realized rating per pair

    std::size_t idx(int user, int item) const {
        return static_cast<std::size_t>(user) * num_items + item;
    }
    std::size_t pair_count() const { return full_rating.size(); }

    // g(x) = E[(pred - r)^2 | x] under the generative law. Exact for
    // non-quantized worlds (quantization breaks the closed form).
    double conditional_sq_error_mean(double pred, std::size_t pair) const;

    InteractionTable full_truth_table() const;
};

struct SyntheticData {
    SyntheticWorld world;
    InteractionTable biased;   // one draw of the MNAR observation mask
    InteractionTable uniform;  // uniform_per_user random items per user, true ratings
};

SyntheticData generate_confounded(const SyntheticConfig& config, std::uint64_t seed);

// Fresh observation mask o ~ Bernoulli(p~) for Monte-Carlo oracles.
InteractionTable sample_observations(const SyntheticWorld& world, std::uint64_t seed);

// The Lemma-1 demonstration world: h in {0,1} on exactly half the pairs
// (balanced strata), rating r = h, p~ = 0.5 +- 0.3*strength, nominal p = 0.5.
// With a zero predictor and squared loss, e = h and the IPS bias is exactly
// 0.3*strength.
SyntheticWorld make_one_stratum_world(int num_users, int num_items, double strength);

}  // namespace balrec
