#include "balrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "balrec/errors.hpp"

namespace balrec {

std::vector<double> average_ranks_ascending(std::span<const double> scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // positions i+1 .. j+1 share the average rank
        const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ContractError("auc: size mismatch");
    std::size_t pos = 0;
    for (int l : labels) pos += l != 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw MetricError("auc undefined: needs at least one positive and one negative label");
    const std::vector<double> ranks = average_ranks_ascending(scores);
    double rank_sum = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j)
        if (labels[j] != 0) rank_sum += ranks[j];
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double dcg_at_k(std::span<const double> scores, std::span<const int> labels, int k) {
    if (k < 1) throw ContractError("dcg: k must be >= 1");
    if (scores.size() != labels.size()) throw ContractError("dcg: size mismatch");
    const std::vector<double> asc = average_ranks_ascending(scores);
    const double n = static_cast<double>(scores.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == 0) continue;
        const double z = n + 1.0 - asc[j];  // descending position, 1 = highest score
        if (z <= static_cast<double>(k)) acc += 1.0 / std::log2(z + 1.0);
    }
    return acc;
}

double ndcg_at_k(std::span<const ScoredList> users, int k) {
    if (k < 1) throw ContractError("ndcg: k must be >= 1");
    double acc = 0.0;
    std::size_t evaluable = 0;
    for (const auto& u : users) {
        int pos = 0;
        for (int l : u.labels) pos += l != 0;
        if (pos == 0) continue;  // IDCG would be 0/0
        double idcg = 0.0;
        for (int j = 1; j <= std::min(pos, k); ++j) idcg += 1.0 / std::log2(j + 1.0);
        acc += dcg_at_k(u.scores, u.labels, k) / idcg;
        ++evaluable;
    }
    if (evaluable == 0) throw MetricError("ndcg undefined: no user has a positive label");
    return acc / static_cast<double>(evaluable);
}

double relative_improvement(double new_value, double base) {
    if (base <= 0.0) throw ContractError("relative_improvement: base must be > 0");
    return 100.0 * (new_value - base) / base;
}

namespace {

std::vector<ScoredList> scored_by_user(const InteractionTable& test, const FactorModel& model,
                                       double label_threshold) {
    std::map<int, ScoredList> by_user;
    for (const auto& r : test.records) {
        auto& list = by_user[r.user];
        list.scores.push_back(model.score(r.user, r.item));
        list.labels.push_back(r.rating >= label_threshold ? 1 : 0);
    }
    std::vector<ScoredList> out;
    out.reserve(by_user.size());
    for (auto& [_, list] : by_user) out.push_back(std::move(list));
    return out;
}

}  // namespace

double auc_on_table(const InteractionTable& test, const FactorModel& model,
                    double label_threshold) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(test.records.size());
    labels.reserve(test.records.size());
    for (const auto& r : test.records) {
        scores.push_back(model.score(r.user, r.item));
        labels.push_back(r.rating >= label_threshold ? 1 : 0);
    }
    return auc(scores, labels);
}

double ndcg_on_table(const InteractionTable& test, const FactorModel& model, int k,
                     double label_threshold) {
    const auto users = scored_by_user(test, model, label_threshold);
    return ndcg_at_k(users, k);
}

}  // namespace balrec
