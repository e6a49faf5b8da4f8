#pragma once

#include <optional>
#include <span>
#include <vector>

#include "balrec/factor_model.hpp"
#include "balrec/table.hpp"

namespace balrec {

enum class Family { ideal, naive, uniform, ips, dr, autodebias };

struct EstimatorKind {
    Family family = Family::naive;
    bool balanced = false;
};

struct PairUI {
    int user = 0;
    int item = 0;
};

// Which factor models a loss family consumes. ips/dr use `propensity`;
// autodebias uses the two-propensity form with `propensity1` on the D-term and
// `propensity2` on the B-term; dr/autodebias use `imputation`.
struct ModelSet {
    const FactorModel* propensity = nullptr;
    const FactorModel* propensity1 = nullptr;
    const FactorModel* propensity2 = nullptr;
    const FactorModel* imputation = nullptr;
};

// Mini-batch views plus the Monte-Carlo scale factors that make batch sums
// unbiased estimates of the full-data sums: a sum over B is estimated by
// scale_B * sum(batch_B) with scale_B = |B|/|batch_B|, and likewise for D.
struct LossBatches {
    long long total_pairs = 0;  // |D| = num_users * num_items
    std::span<const Interaction> batch_B;
    double scale_B = 1.0;
    std::span<const PairUI> batch_D;
    double scale_D = 1.0;
    std::span<const Interaction> batch_U;
    std::span<const Interaction> full_truth;  // family ideal only
};

struct PerSampleTerm {
    int user = 0;
    int item = 0;
    double term = 0.0;
};

struct LossValue {
    double value = 0.0;
    std::optional<ParamVector> grad_theta;
    std::vector<PerSampleTerm> terms;
};

// Balancing weights, already normalized (module balancing). w_B covers batch_B
// (the single weight vector for naive/ips, w2 for dr/autodebias); w_D covers
// batch_D (w1 for dr/autodebias).
struct WeightSet {
    std::span<const double> w_B;
    std::span<const double> w_D;
};

double prediction_error(double r, double r_hat, Objective delta);

// Unbalanced estimators:
//   ideal  mean e over the full-truth table
//   naive  mean e over B
//   uniform mean e over U
//   ips    (1/|D|) sum_B e/p
//   dr     (1/|D|) sum_D e_hat + (1/|D|) sum_B (e - e_hat)/p
//   autodebias (1/|D|) sum_D e_hat/p1 + (1/|D|) sum_B e/p2
LossValue base_loss(EstimatorKind kind, const FactorModel& theta, Objective delta,
                    const ModelSet& models, const LossBatches& batches,
                    bool want_grad = false, bool want_terms = false);

// Balanced variants: the 1/|D| coefficients are replaced by per-sample weights
// (mean-normalized to 1/|D| upstream). grad_theta flows through e only; the
// imputation does not depend on theta here.
LossValue balanced_loss(EstimatorKind kind, const FactorModel& theta, Objective delta,
                        const ModelSet& models, const LossBatches& batches,
                        const WeightSet& weights, bool want_grad = false,
                        bool want_terms = false);

LossValue uniform_loss(std::span<const Interaction> batch_U, const FactorModel& theta,
                       Objective delta, bool want_grad = false);

void dump_terms_csv(const LossValue& loss, const std::string& path);

const char* family_name(Family f);

}  // namespace balrec
