#pragma once

#include <span>
#include <vector>

#include "balrec/factor_model.hpp"
#include "balrec/table.hpp"

namespace balrec {

// Ascending average ranks (1 = lowest score); ties get the mean of the tied
// positions, so ranks always sum to n(n+1)/2.
std::vector<double> average_ranks_ascending(std::span<const double> scores);

// Global Mann-Whitney AUC with the average-rank tie convention:
//   (sum of positives' ascending ranks - |P|(|P|+1)/2) / (|P| |N|).
// Requires at least one positive and one negative label.
double auc(std::span<const double> scores, std::span<const int> labels);

struct ScoredList {
    std::vector<double> scores;
    std::vector<int> labels;
};

// DCG@k of one user's list with binary relevance: positives at descending
// average-rank Z <= k contribute 1/log2(Z+1).
double dcg_at_k(std::span<const double> scores, std::span<const int> labels, int k);

// Mean over users with at least one positive of DCG@k / IDCG@k, where IDCG@k
// places all positives at the top of the list.
double ndcg_at_k(std::span<const ScoredList> users, int k);

// 100 * (new_value - base) / base.
double relative_improvement(double new_value, double base);

// Table conveniences: scores from the model, labels = rating >= label_threshold.
double auc_on_table(const InteractionTable& test, const FactorModel& model,
                    double label_threshold);
double ndcg_on_table(const InteractionTable& test, const FactorModel& model, int k,
                     double label_threshold);

}  // namespace balrec
