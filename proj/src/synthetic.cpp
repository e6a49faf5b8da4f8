#include "balrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "balrec/errors.hpp"
#include "balrec/seeds.hpp"

namespace balrec {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

double SyntheticWorld::conditional_sq_error_mean(double pred, std::size_t pair) const {
    if (quantized)
        throw ContractError("conditional_sq_error_mean: not available for quantized worlds");
    const double mean_r = clean_rating[pair] + rating_confound_coef * h_mean;
    const double d = pred - mean_r;
    return d * d + rating_confound_coef * rating_confound_coef * h_var +
           rating_noise * rating_noise;
}

InteractionTable SyntheticWorld::full_truth_table() const {
    InteractionTable t;
    t.num_users = num_users;
    t.num_items = num_items;
    t.role = TableRole::full_truth;
    t.records.reserve(pair_count());
    for (int u = 0; u < num_users; ++u)
        for (int i = 0; i < num_items; ++i) t.records.push_back({u, i, full_rating[idx(u, i)]});
    return t;
}

SyntheticData generate_confounded(const SyntheticConfig& cfg, std::uint64_t seed) {
    if (cfg.num_users < 1 || cfg.num_items < 1)
        throw ContractError("generate_confounded: need users and items");
    if (cfg.uniform_per_user > cfg.num_items)
        throw ContractError("generate_confounded: uniform_per_user exceeds item count");
    if (!(cfg.propensity_min > 0.0 && cfg.propensity_min < 0.5))
        throw ContractError("generate_confounded: propensity_min must be in (0, 0.5)");

    SyntheticData out;
    SyntheticWorld& w = out.world;
    w.num_users = cfg.num_users;
    w.num_items = cfg.num_items;
    w.confound_strength = cfg.confound_strength;
    w.rating_noise = cfg.rating_noise;
    w.quantized = cfg.quantize;
    w.h_mean = 0.0;  // Rademacher
    w.h_var = 1.0;
    w.rating_confound_coef = cfg.confound_strength;

    const std::size_t pairs =
        static_cast<std::size_t>(cfg.num_users) * static_cast<std::size_t>(cfg.num_items);
    w.confounder.resize(pairs);
    w.true_propensity.resize(pairs);
    w.nominal_propensity.resize(pairs);
    w.clean_rating.resize(pairs);
    w.full_rating.resize(pairs);

    auto rng_latent = make_rng(seed, "synth.latent");
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double es = cfg.embed_scale / std::sqrt(static_cast<double>(cfg.latent_dim));
    std::vector<double> uf(static_cast<std::size_t>(cfg.num_users) * cfg.latent_dim);
    std::vector<double> vf(static_cast<std::size_t>(cfg.num_items) * cfg.latent_dim);
    std::vector<double> ub(cfg.num_users), vb(cfg.num_items);
    for (auto& x : uf) x = es * gauss(rng_latent);
    for (auto& x : vf) x = es * gauss(rng_latent);
    for (auto& x : ub) x = cfg.bias_scale * gauss(rng_latent);
    for (auto& x : vb) x = cfg.bias_scale * gauss(rng_latent);

    // Clean scores and their population spread, used to standardize the
    // propensity tilt so base_obs_rate stays interpretable.
    double zsum = 0.0, zsq = 0.0;
    for (int u = 0; u < cfg.num_users; ++u)
        for (int i = 0; i < cfg.num_items; ++i) {
            double dot = 0.0;
            for (int k = 0; k < cfg.latent_dim; ++k)
                dot += uf[static_cast<std::size_t>(u) * cfg.latent_dim + k] *
                       vf[static_cast<std::size_t>(i) * cfg.latent_dim + k];
            const double z = dot + ub[u] + vb[i];
            w.clean_rating[w.idx(u, i)] = z;
            zsum += z;
            zsq += z * z;
        }
    const double zmean = zsum / static_cast<double>(pairs);
    const double zsd = std::sqrt(std::max(1e-12, zsq / static_cast<double>(pairs) - zmean * zmean));

    auto rng_conf = make_rng(seed, "synth.confounder");
    auto rng_noise = make_rng(seed, "synth.noise");
    std::bernoulli_distribution coin(0.5);
    const double base_logit = logit(cfg.base_obs_rate);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double h = coin(rng_conf) ? 1.0 : -1.0;
        w.confounder[k] = h;
        double ell = base_logit;
        if (cfg.family == PropensityFamily::preference)
            ell += cfg.propensity_tilt * (w.clean_rating[k] - zmean) / zsd;
        const double g = cfg.confound_strength;
        w.true_propensity[k] = sigmoid(ell + g * h);
        w.nominal_propensity[k] = 0.5 * (sigmoid(ell + g) + sigmoid(ell - g));
        double r = w.clean_rating[k] + g * h + cfg.rating_noise * gauss(rng_noise);
        if (cfg.quantize) {
            r = std::round(cfg.quantize_center + cfg.quantize_scale * r);
            r = std::clamp(r, 1.0, 5.0);
        }
        w.full_rating[k] = r;
        if (w.true_propensity[k] < cfg.propensity_min ||
            w.true_propensity[k] > 1.0 - cfg.propensity_min)
            throw ConfigError("generate_confounded: true propensity leaves [" +
                              std::to_string(cfg.propensity_min) + ", " +
                              std::to_string(1.0 - cfg.propensity_min) + "]");
    }

    out.biased = sample_observations(w, derive_seed(seed, "synth.mask"));

    // Uniform sample: distinct random items per user, true ratings recorded.
    out.uniform.num_users = cfg.num_users;
    out.uniform.num_items = cfg.num_items;
    out.uniform.role = TableRole::uniform_test;
    auto rng_uni = make_rng(seed, "synth.uniform");
    std::vector<int> items(cfg.num_items);
    std::iota(items.begin(), items.end(), 0);
    for (int u = 0; u < cfg.num_users; ++u) {
        std::shuffle(items.begin(), items.end(), rng_uni);
        for (int j = 0; j < cfg.uniform_per_user; ++j)
            out.uniform.records.push_back({u, items[j], w.full_rating[w.idx(u, items[j])]});
    }
    return out;
}

InteractionTable sample_observations(const SyntheticWorld& w, std::uint64_t seed) {
    InteractionTable t;
    t.num_users = w.num_users;
    t.num_items = w.num_items;
    t.role = TableRole::biased;
    auto rng = make_rng(seed, "synth.observe");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int u = 0; u < w.num_users; ++u)
        for (int i = 0; i < w.num_items; ++i) {
            const std::size_t k = w.idx(u, i);
            if (unif(rng) < w.true_propensity[k])
                t.records.push_back({u, i, w.full_rating[k]});
        }
    return t;
}

SyntheticWorld make_one_stratum_world(int num_users, int num_items, double strength) {
    if (num_users < 1 || num_items < 1)
        throw ContractError("one_stratum: need users and items");
    if ((static_cast<long long>(num_users) * num_items) % 2 != 0)
        throw ContractError("one_stratum: pair count must be even for balanced strata");
    if (!(strength >= 0.0 && strength <= 1.0))
        throw ContractError("one_stratum: strength must be in [0, 1]");
    SyntheticWorld w;
    w.num_users = num_users;
    w.num_items = num_items;
    w.confound_strength = strength;
    w.rating_noise = 0.0;
    w.h_mean = 0.5;  // h in {0,1}, balanced by pair parity
    w.h_var = 0.25;
    w.rating_confound_coef = 1.0;  // rating r = h
    const std::size_t pairs = static_cast<std::size_t>(num_users) * num_items;
    w.confounder.resize(pairs);
    w.true_propensity.resize(pairs);
    w.nominal_propensity.resize(pairs);
    w.clean_rating.assign(pairs, 0.0);
    w.full_rating.resize(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double h = static_cast<double>(k % 2);
        w.confounder[k] = h;
        w.full_rating[k] = h;
        w.true_propensity[k] = 0.5 + 0.3 * strength * (h > 0.5 ? 1.0 : -1.0);
        w.nominal_propensity[k] = 0.5;
    }
    return w;
}

}  // namespace balrec
