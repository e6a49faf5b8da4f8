#include "balrec/balancing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "balrec/errors.hpp"

namespace balrec {

WeightBatch normalize_weights(std::span<const double> raw, double target_mean) {
    if (raw.empty()) throw ContractError("normalize_weights: empty batch");
    if (target_mean <= 0.0) throw ContractError("normalize_weights: target_mean must be > 0");
    double sum = 0.0;
    for (double r : raw) {
        if (!(r > 0.0)) throw ContractError("normalize_weights: raw weights must be > 0");
        sum += r;
    }
    const double mean = sum / static_cast<double>(raw.size());
    WeightBatch out;
    out.raw.assign(raw.begin(), raw.end());
    out.target_mean = target_mean;
    out.normalized.resize(raw.size());
    const double scale = target_mean / mean;
    for (std::size_t j = 0; j < raw.size(); ++j) out.normalized[j] = raw[j] * scale;
    return out;
}

double entropy_term(std::span<const double> weights) {
    double acc = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw ContractError("entropy_term: weights must be > 0");
        acc += w * std::log(w);
    }
    return acc;
}

namespace {

// Per-sample moment values a_j of the family's balancing identity.
struct Moments {
    std::vector<double> a_B;
    std::vector<double> a_D;
};

double need_prop(const FactorModel* m, int u, int i, const char* msg) {
    if (!m) throw ContractError(msg);
    return m->score(u, i);
}

Moments moment_values(Family family, const FactorModel& theta, Objective delta,
                      const ModelSet& models, const LossBatches& b) {
    Moments mo;
    mo.a_B.reserve(b.batch_B.size());
    switch (family) {
        case Family::naive:
            for (const auto& r : b.batch_B)
                mo.a_B.push_back(sample_error(theta, delta, r.user, r.item, r.rating).value);
            break;
        case Family::ips:
            for (const auto& r : b.batch_B) {
                const double p = need_prop(models.propensity, r.user, r.item,
                                           "weight objective: ips requires a propensity model");
                mo.a_B.push_back(sample_error(theta, delta, r.user, r.item, r.rating).value / p);
            }
            break;
        case Family::dr:
            if (!models.imputation)
                throw ContractError("weight objective: dr requires an imputation model");
            mo.a_D.reserve(b.batch_D.size());
            for (const auto& d : b.batch_D) mo.a_D.push_back(models.imputation->score(d.user, d.item));
            for (const auto& r : b.batch_B) {
                const double p = need_prop(models.propensity, r.user, r.item,
                                           "weight objective: dr requires a propensity model");
                const double e = sample_error(theta, delta, r.user, r.item, r.rating).value;
                mo.a_B.push_back((e - models.imputation->score(r.user, r.item)) / p);
            }
            break;
        case Family::autodebias:
            if (!models.imputation)
                throw ContractError("weight objective: autodebias requires an imputation model");
            mo.a_D.reserve(b.batch_D.size());
            for (const auto& d : b.batch_D) {
                const double p1 = need_prop(models.propensity1, d.user, d.item,
                                            "weight objective: autodebias requires propensity1");
                mo.a_D.push_back(models.imputation->score(d.user, d.item) / p1);
            }
            for (const auto& r : b.batch_B) {
                const double p2 = need_prop(models.propensity2, r.user, r.item,
                                            "weight objective: autodebias requires propensity2");
                mo.a_B.push_back(sample_error(theta, delta, r.user, r.item, r.rating).value / p2);
            }
            break;
        default:
            throw ContractError("weight objective: family has no balanced form");
    }
    return mo;
}

double uniform_mean_error(const FactorModel& theta, Objective delta,
                          std::span<const Interaction> batch_U) {
    if (batch_U.empty()) throw ContractError("weight objective: empty U sample");
    double acc = 0.0;
    for (const auto& r : batch_U)
        acc += sample_error(theta, delta, r.user, r.item, r.rating).value;
    return acc / static_cast<double>(batch_U.size());
}

bool has_d_block(Family family) { return family == Family::dr || family == Family::autodebias; }

}  // namespace

BatchWeights compute_weights(const WeightModels& xi, const LossBatches& b) {
    if (!xi.xi_B) throw ContractError("compute_weights: xi_B model required");
    if (b.total_pairs <= 0) throw ContractError("compute_weights: total_pairs must be positive");
    const double target = 1.0 / static_cast<double>(b.total_pairs);
    BatchWeights out;
    std::vector<double> raw;
    raw.reserve(b.batch_B.size());
    for (const auto& r : b.batch_B) raw.push_back(xi.xi_B->score(r.user, r.item));
    out.w_B = normalize_weights(raw, target).normalized;
    if (xi.xi_D) {
        raw.clear();
        raw.reserve(b.batch_D.size());
        for (const auto& d : b.batch_D) raw.push_back(xi.xi_D->score(d.user, d.item));
        out.w_D = normalize_weights(raw, target).normalized;
    }
    return out;
}

double constraint_gap(Family family, const FactorModel& theta, Objective delta,
                      const ModelSet& models, const LossBatches& b, const WeightSet& w) {
    const Moments mo = moment_values(family, theta, delta, models, b);
    if (w.w_B.size() != mo.a_B.size()) throw ContractError("constraint_gap: w_B size mismatch");
    if (has_d_block(family) && w.w_D.size() != mo.a_D.size())
        throw ContractError("constraint_gap: w_D size mismatch");
    double lhs = 0.0;
    for (std::size_t j = 0; j < mo.a_B.size(); ++j) lhs += w.w_B[j] * mo.a_B[j];
    lhs *= b.scale_B;
    if (has_d_block(family)) {
        double acc = 0.0;
        for (std::size_t j = 0; j < mo.a_D.size(); ++j) acc += w.w_D[j] * mo.a_D[j];
        lhs += b.scale_D * acc;
    }
    return lhs - uniform_mean_error(theta, delta, b.batch_U);
}

namespace {

// Backprop of dvalue/dw through the exact mean rescale w_j = t r_j / mean(r)
// and the model link, scattered into the xi gradient.
void backprop_block(const FactorModel& xi, std::span<const Interaction> pairsB,
                    std::span<const PairUI> pairsD, bool use_d,
                    std::span<const double> w, std::span<const double> dval_dw,
                    double target, ParamVector& grad) {
    const std::size_t n = w.size();
    // recover m = mean(raw) from w = t*raw/m: raw_k = w_k * m / t, and we only
    // need t/m and the weighted correction term.
    double sum_qw = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum_qw += dval_dw[j] * w[j];
    // t/m = (t/m); m unknown here, so recompute raw means from the model.
    double mean_raw = 0.0;
    std::vector<ScoreEval> evals(n);
    for (std::size_t j = 0; j < n; ++j) {
        const int u = use_d ? pairsD[j].user : pairsB[j].user;
        const int i = use_d ? pairsD[j].item : pairsB[j].item;
        evals[j] = score_eval(xi, u, i);
        mean_raw += evals[j].out;
    }
    mean_raw /= static_cast<double>(n);
    const double t_over_m = target / mean_raw;
    const double corr = sum_qw / (mean_raw * static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double dval_draw = t_over_m * dval_dw[j] - corr;
        const double g = dval_draw * evals[j].dout_draw;
        const int u = use_d ? pairsD[j].user : pairsB[j].user;
        const int i = use_d ? pairsD[j].item : pairsB[j].item;
        scatter_raw_grad(xi, u, i, g, grad);
    }
}

}  // namespace

WeightLossResult weight_loss(Family family, const FactorModel& theta, Objective delta,
                             const ModelSet& models, const WeightModels& xi,
                             const LossBatches& b, double lambda, EntropySign sign,
                             bool want_grad) {
    if (lambda < 0.0) throw ContractError("weight_loss: lambda must be >= 0");
    if (!xi.xi_B) throw ContractError("weight_loss: xi_B model required");
    if (has_d_block(family) && !xi.xi_D)
        throw ContractError("weight_loss: family requires a xi_D model");

    WeightLossResult res;
    res.weights = compute_weights(xi, b);
    const Moments mo = moment_values(family, theta, delta, models, b);
    const double u_mean = uniform_mean_error(theta, delta, b.batch_U);
    const double s = sign == EntropySign::max_entropy ? 1.0 : -1.0;
    const double target = 1.0 / static_cast<double>(b.total_pairs);

    double lhs = 0.0, ent = 0.0;
    for (std::size_t j = 0; j < res.weights.w_B.size(); ++j) {
        lhs += res.weights.w_B[j] * mo.a_B[j];
        ent += res.weights.w_B[j] * std::log(res.weights.w_B[j]);
    }
    lhs *= b.scale_B;
    ent *= b.scale_B;
    if (has_d_block(family)) {
        double l = 0.0, e = 0.0;
        for (std::size_t j = 0; j < res.weights.w_D.size(); ++j) {
            l += res.weights.w_D[j] * mo.a_D[j];
            e += res.weights.w_D[j] * std::log(res.weights.w_D[j]);
        }
        lhs += b.scale_D * l;
        ent += b.scale_D * e;
    }
    res.gap = lhs - u_mean;
    res.entropy = ent;
    res.value = s * ent + lambda * res.gap * res.gap;

    if (!want_grad) return res;

    // dvalue/dw_j = s*scale*(ln w_j + 1) + 2*lambda*gap*scale*a_j per block
    std::vector<double> dval_dw(res.weights.w_B.size());
    for (std::size_t j = 0; j < dval_dw.size(); ++j)
        dval_dw[j] = s * b.scale_B * (std::log(res.weights.w_B[j]) + 1.0) +
                     2.0 * lambda * res.gap * b.scale_B * mo.a_B[j];
    res.grad_xi_B.assign(xi.xi_B->param_count(), 0.0);
    backprop_block(*xi.xi_B, b.batch_B, {}, false, res.weights.w_B, dval_dw, target,
                   res.grad_xi_B);
    if (has_d_block(family)) {
        dval_dw.assign(res.weights.w_D.size(), 0.0);
        for (std::size_t j = 0; j < dval_dw.size(); ++j)
            dval_dw[j] = s * b.scale_D * (std::log(res.weights.w_D[j]) + 1.0) +
                         2.0 * lambda * res.gap * b.scale_D * mo.a_D[j];
        res.grad_xi_D.assign(xi.xi_D->param_count(), 0.0);
        backprop_block(*xi.xi_D, {}, b.batch_D, true, res.weights.w_D, dval_dw, target,
                       res.grad_xi_D);
    }
    return res;
}

void dump_weights_csv(std::span<const PairUI> pairs, std::span<const double> weights,
                      const std::string& path) {
    if (pairs.size() != weights.size()) throw ContractError("dump_weights_csv: size mismatch");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open weights csv: " + path);
    out << "user,item,weight\n";
    char buf[64];
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", weights[j]);
        out << pairs[j].user << ',' << pairs[j].item << ',' << buf << '\n';
    }
}

}  // namespace balrec
