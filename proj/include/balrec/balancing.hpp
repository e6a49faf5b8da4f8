#pragma once

#include <span>
#include <vector>

#include "balrec/estimators.hpp"
#include "balrec/factor_model.hpp"

namespace balrec {

// Positive raw weights (sigmoid outputs of a balancing model) rescaled so the
// batch mean equals target_mean exactly; order-preserving.
struct WeightBatch {
    std::vector<double> raw;
    std::vector<double> normalized;
    double target_mean = 0.0;
};

WeightBatch normalize_weights(std::span<const double> raw, double target_mean);

// sum_j w_j ln w_j (natural log). Lower values mean higher empirical entropy.
double entropy_term(std::span<const double> weights);

// Sign of the entropy term in the weight objective. max_entropy minimizes
// sum w ln w (maximizes entropy, prevents extreme weights, matches the
// degeneracy claims); paper keeps the literal printed sign of L_W.
enum class EntropySign { max_entropy, paper };

// Balancing models: xi_B reweights the observed block (the single xi for
// naive/ips, xi_2 for dr/autodebias); xi_D reweights the all-pairs block
// (xi_1, dr/autodebias only).
struct WeightModels {
    const FactorModel* xi_B = nullptr;
    const FactorModel* xi_D = nullptr;
};

// Normalized weights for the current batches (target mean 1/|D| per block).
struct BatchWeights {
    std::vector<double> w_B;
    std::vector<double> w_D;
};
BatchWeights compute_weights(const WeightModels& xi, const LossBatches& batches);

// LHS - RHS of the family's balancing equality, e.g. for ips:
//   sum_B w e/p  -  mean_U(e).
double constraint_gap(Family family, const FactorModel& theta, Objective delta,
                      const ModelSet& models, const LossBatches& batches,
                      const WeightSet& weights);

struct WeightLossResult {
    double value = 0.0;
    double gap = 0.0;
    double entropy = 0.0;  // scaled sum w ln w actually used in the objective
    BatchWeights weights;
    ParamVector grad_xi_B;
    ParamVector grad_xi_D;  // empty unless the family has a D block
};

// Weight-model objective  value = s * sum w ln w + lambda * gap^2  with the
// gradient taken through the batch normalization and the sigmoid link into xi.
WeightLossResult weight_loss(Family family, const FactorModel& theta, Objective delta,
                             const ModelSet& models, const WeightModels& xi,
                             const LossBatches& batches, double lambda, EntropySign sign,
                             bool want_grad = true);

void dump_weights_csv(std::span<const PairUI> pairs, std::span<const double> weights,
                      const std::string& path);

}  // namespace balrec
