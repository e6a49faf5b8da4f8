#include "balrec/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "balrec/errors.hpp"

namespace balrec {

double prediction_error(double r, double r_hat, Objective delta) {
    switch (delta) {
        case Objective::squared: {
            const double d = r_hat - r;
            return d * d;
        }
        case Objective::cross_entropy: {
            if (r != 0.0 && r != 1.0)
                throw ContractError("prediction_error: cross-entropy needs r in {0,1}");
            if (r_hat <= 0.0 || r_hat >= 1.0)
                throw ContractError("prediction_error: cross-entropy needs r_hat in (0,1)");
            return -(r * std::log(r_hat) + (1.0 - r) * std::log1p(-r_hat));
        }
        case Objective::linear:
            return r * r_hat;
    }
    throw ContractError("unknown delta");
}

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw ContractError(msg);
}

// Accumulates coeff_j * e_j (value and theta-gradient) over a batch of rated pairs.
struct ErrorAccumulator {
    const FactorModel& theta;
    Objective delta;
    ParamVector* grad;  // nullable
    std::vector<PerSampleTerm>* terms;
    double value = 0.0;

    void add(int user, int item, double target, double coeff) {
        const SampleError e = sample_error(theta, delta, user, item, target);
        const double term = coeff * e.value;
        if (!std::isfinite(term))
            throw NumericError("loss: non-finite term at user=" + std::to_string(user) +
                               " item=" + std::to_string(item));
        value += term;
        if (terms) terms->push_back({user, item, term});
        if (grad) scatter_raw_grad(theta, user, item, coeff * e.dvalue_draw, *grad);
    }

    // theta-independent contribution (imputation terms)
    void add_const(int user, int item, double term) {
        if (!std::isfinite(term))
            throw NumericError("loss: non-finite term at user=" + std::to_string(user) +
                               " item=" + std::to_string(item));
        value += term;
        if (terms) terms->push_back({user, item, term});
    }
};

double propensity_at(const FactorModel* p, int user, int item, const char* which) {
    require(p != nullptr, which);
    return p->score(user, item);
}

}  // namespace

LossValue base_loss(EstimatorKind kind, const FactorModel& theta, Objective delta,
                    const ModelSet& models, const LossBatches& b, bool want_grad,
                    bool want_terms) {
    require(!kind.balanced, "base_loss: balanced kind passed; use balanced_loss");
    LossValue out;
    if (want_grad) out.grad_theta = ParamVector(theta.param_count(), 0.0);
    ErrorAccumulator acc{theta, delta, want_grad ? &*out.grad_theta : nullptr,
                         want_terms ? &out.terms : nullptr};
    const double invD = 1.0 / static_cast<double>(b.total_pairs);

    switch (kind.family) {
        case Family::ideal: {
            require(!b.full_truth.empty(), "base_loss: ideal requires a full-truth table");
            const double c = 1.0 / static_cast<double>(b.full_truth.size());
            for (const auto& r : b.full_truth) acc.add(r.user, r.item, r.rating, c);
            break;
        }
        case Family::naive: {
            require(!b.batch_B.empty(), "base_loss: naive requires B samples");
            const double c = 1.0 / static_cast<double>(b.batch_B.size());
            for (const auto& r : b.batch_B) acc.add(r.user, r.item, r.rating, c);
            break;
        }
        case Family::uniform: {
            require(!b.batch_U.empty(), "base_loss: uniform requires U samples");
            const double c = 1.0 / static_cast<double>(b.batch_U.size());
            for (const auto& r : b.batch_U) acc.add(r.user, r.item, r.rating, c);
            break;
        }
        case Family::ips: {
            require(b.total_pairs > 0, "base_loss: ips requires |D|");
            const double c = b.scale_B * invD;
            for (const auto& r : b.batch_B) {
                const double p = propensity_at(models.propensity, r.user, r.item,
                                               "base_loss: ips requires a propensity model");
                acc.add(r.user, r.item, r.rating, c / p);
            }
            break;
        }
        case Family::dr: {
            require(b.total_pairs > 0, "base_loss: dr requires |D|");
            require(models.imputation != nullptr, "base_loss: dr requires an imputation model");
            require(!b.batch_D.empty(), "base_loss: dr requires D samples");
            const double cD = 1.0 / static_cast<double>(b.batch_D.size());
            for (const auto& d : b.batch_D)
                acc.add_const(d.user, d.item, cD * models.imputation->score(d.user, d.item));
            const double cB = b.scale_B * invD;
            for (const auto& r : b.batch_B) {
                const double p = propensity_at(models.propensity, r.user, r.item,
                                               "base_loss: dr requires a propensity model");
                const double ehat = models.imputation->score(r.user, r.item);
                acc.add(r.user, r.item, r.rating, cB / p);
                acc.add_const(r.user, r.item, -cB * ehat / p);
            }
            break;
        }
        case Family::autodebias: {
            require(b.total_pairs > 0, "base_loss: autodebias requires |D|");
            require(models.imputation != nullptr,
                    "base_loss: autodebias requires an imputation model");
            require(!b.batch_D.empty(), "base_loss: autodebias requires D samples");
            const double cD = 1.0 / static_cast<double>(b.batch_D.size());
            for (const auto& d : b.batch_D) {
                const double p1 = propensity_at(models.propensity1, d.user, d.item,
                                                "base_loss: autodebias requires propensity1");
                acc.add_const(d.user, d.item,
                              cD * models.imputation->score(d.user, d.item) / p1);
            }
            const double cB = b.scale_B * invD;
            for (const auto& r : b.batch_B) {
                const double p2 = propensity_at(models.propensity2, r.user, r.item,
                                                "base_loss: autodebias requires propensity2");
                acc.add(r.user, r.item, r.rating, cB / p2);
            }
            break;
        }
    }
    out.value = acc.value;
    return out;
}

LossValue balanced_loss(EstimatorKind kind, const FactorModel& theta, Objective delta,
                        const ModelSet& models, const LossBatches& b, const WeightSet& w,
                        bool want_grad, bool want_terms) {
    require(kind.balanced, "balanced_loss: kind is not balanced");
    require(w.w_B.size() == b.batch_B.size(), "balanced_loss: w_B size mismatch");
    LossValue out;
    if (want_grad) out.grad_theta = ParamVector(theta.param_count(), 0.0);
    ErrorAccumulator acc{theta, delta, want_grad ? &*out.grad_theta : nullptr,
                         want_terms ? &out.terms : nullptr};

    switch (kind.family) {
        case Family::naive: {  // Bal-MF: sum_B w e
            for (std::size_t j = 0; j < b.batch_B.size(); ++j) {
                const auto& r = b.batch_B[j];
                acc.add(r.user, r.item, r.rating, b.scale_B * w.w_B[j]);
            }
            break;
        }
        case Family::ips: {  // sum_B w e/p
            for (std::size_t j = 0; j < b.batch_B.size(); ++j) {
                const auto& r = b.batch_B[j];
                const double p = propensity_at(models.propensity, r.user, r.item,
                                               "balanced_loss: ips requires a propensity model");
                acc.add(r.user, r.item, r.rating, b.scale_B * w.w_B[j] / p);
            }
            break;
        }
        case Family::dr: {  // sum_D w1 e_hat + sum_B w2 (e - e_hat)/p
            require(w.w_D.size() == b.batch_D.size(), "balanced_loss: w_D size mismatch");
            require(models.imputation != nullptr,
                    "balanced_loss: dr requires an imputation model");
            for (std::size_t j = 0; j < b.batch_D.size(); ++j) {
                const auto& d = b.batch_D[j];
                acc.add_const(d.user, d.item,
                              b.scale_D * w.w_D[j] * models.imputation->score(d.user, d.item));
            }
            for (std::size_t j = 0; j < b.batch_B.size(); ++j) {
                const auto& r = b.batch_B[j];
                const double p = propensity_at(models.propensity, r.user, r.item,
                                               "balanced_loss: dr requires a propensity model");
                const double ehat = models.imputation->score(r.user, r.item);
                const double c = b.scale_B * w.w_B[j] / p;
                acc.add(r.user, r.item, r.rating, c);
                acc.add_const(r.user, r.item, -c * ehat);
            }
            break;
        }
        case Family::autodebias: {  // sum_D w1 e_hat/p1 + sum_B w2 e/p2
            require(w.w_D.size() == b.batch_D.size(), "balanced_loss: w_D size mismatch");
            require(models.imputation != nullptr,
                    "balanced_loss: autodebias requires an imputation model");
            for (std::size_t j = 0; j < b.batch_D.size(); ++j) {
                const auto& d = b.batch_D[j];
                const double p1 = propensity_at(models.propensity1, d.user, d.item,
                                                "balanced_loss: autodebias requires propensity1");
                acc.add_const(d.user, d.item,
                              b.scale_D * w.w_D[j] * models.imputation->score(d.user, d.item) / p1);
            }
            for (std::size_t j = 0; j < b.batch_B.size(); ++j) {
                const auto& r = b.batch_B[j];
                const double p2 = propensity_at(models.propensity2, r.user, r.item,
                                                "balanced_loss: autodebias requires propensity2");
                acc.add(r.user, r.item, r.rating, b.scale_B * w.w_B[j] / p2);
            }
            break;
        }
        default:
            throw ContractError("balanced_loss: family has no balanced form");
    }
    out.value = acc.value;
    return out;
}

LossValue uniform_loss(std::span<const Interaction> batch_U, const FactorModel& theta,
                       Objective delta, bool want_grad) {
    require(!batch_U.empty(), "uniform_loss: empty U sample");
    LossBatches b;
    b.total_pairs = 1;
    b.batch_U = batch_U;
    return base_loss({Family::uniform, false}, theta, delta, ModelSet{}, b, want_grad, false);
}

void dump_terms_csv(const LossValue& loss, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open terms csv: " + path);
    out << "user,item,term\n";
    char buf[64];
    for (const auto& t : loss.terms) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.term);
        out << t.user << ',' << t.item << ',' << buf << '\n';
    }
}

const char* family_name(Family f) {
    switch (f) {
        case Family::ideal: return "ideal";
        case Family::naive: return "naive";
        case Family::uniform: return "uniform";
        case Family::ips: return "ips";
        case Family::dr: return "dr";
        case Family::autodebias: return "autodebias";
    }
    return "?";
}

}  // namespace balrec
