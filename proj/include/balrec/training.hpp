#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "balrec/balancing.hpp"
#include "balrec/estimators.hpp"
#include "balrec/factor_model.hpp"
#include "balrec/table.hpp"

namespace balrec {

enum class OptimRule { plain_sgd, adam };

struct OptimState {
    std::vector<double> m;  // first moment (adam)
    std::vector<double> v;  // second moment (adam)
    long long step = 0;
};

// delta_out = update to ADD to the parameters.
//   plain-sgd: -lr * (grad + wd * params)
//   adam:      bias-corrected moments of (grad + wd * params), beta1=0.9,
//              beta2=0.999, eps=1e-8
void optimizer_step(OptimState& state, OptimRule rule, double lr, double weight_decay,
                    std::span<const double> grad, std::span<const double> params,
                    std::span<double> delta_out);

struct MethodSpec {
    Family family = Family::naive;  // mf maps to naive
    bool balanced = false;
};
MethodSpec parse_method(const std::string& name);
std::string method_name(const MethodSpec& m);

struct TrainConfig {
    int outer_iters = 50;  // T
    int inner_steps = 30;  // S
    int dim = 8;
    double lr_theta = 0.5;
    double wd_theta = 1e-4;
    double lr_phi = 0.003;
    double wd_phi = 1e-4;
    double lr_xi = 1.0;
    double wd_xi = 1e-4;
    OptimRule opt_theta = OptimRule::plain_sgd;
    OptimRule opt_phi = OptimRule::adam;
    OptimRule opt_xi = OptimRule::plain_sgd;
    double lambda = 0.015625;  // 2^-6
    EntropySign entropy_sign = EntropySign::max_entropy;
    int batch_b = 512;
    int batch_d = 512;
    int batch_u = 256;
    double clip_floor = 0.05;   // propensity models
    Objective delta = Objective::cross_entropy;
    int patience = 10;
    std::uint64_t seed = 1;
    double label_threshold = 0.5;  // metric labels: rating >= threshold
};

// Coarse forward/backward accounting for the bounded-runtime check: every
// inner step performs a fixed number of passes.
struct PassCounts {
    long long forward = 0;
    long long forward_backward = 0;
    long long backward_on_backward = 0;
};

struct RunLogRow {
    int t = 0;
    double theta_loss = 0.0;
    double weight_value = 0.0;  // balanced methods only
    double gap = 0.0;           // balanced methods only
    double val_auc = 0.0;
};

struct TrainState {
    MethodSpec method;
    TrainConfig config;
    FactorModel theta;
    std::optional<FactorModel> prop, prop1, prop2, imput;  // phi
    std::optional<FactorModel> xi_B, xi_D;                 // balancing models
    OptimState opt_theta, opt_prop, opt_prop1, opt_prop2, opt_imput, opt_xi_B, opt_xi_D;
    std::mt19937_64 rng_alg1_B, rng_alg1_U, rng_D, rng_B, rng_U;
    PassCounts passes;
    std::vector<RunLogRow> log;
    FactorModel best_theta;
    double best_val_auc = -1.0;
    int best_iter = -1;
    int outer_done = 0;

    ModelSet phi_set() const;
    WeightModels xi_set() const;
};

TrainState init_state(const MethodSpec& method, int num_users, int num_items,
                      const TrainConfig& config);

// One assumed prediction-model update theta' = theta - eta * grad L_B; theta is
// not mutated.
FactorModel assumed_update(const FactorModel& theta, Family family, Objective delta,
                           const ModelSet& phi, const LossBatches& batches, double eta,
                           PassCounts* passes = nullptr);

// Gradient of the upper loss through the assumed update,
//   d/dphi L_U(theta - eta * grad_theta L_B(theta, phi)),
// via the mixed Hessian-vector product. Roles whose output does not enter the
// theta-gradient of L_B (imputation everywhere, propensity1 for autodebias)
// get exactly zero.
struct PhiGrads {
    ParamVector prop, prop1, prop2, imput;
};
PhiGrads hypergradient(const FactorModel& theta, Family family, Objective delta,
                       const ModelSet& phi, const LossBatches& batches, double eta,
                       PassCounts* passes = nullptr);

// Alg. 1: S hypergradient steps on the propensity/imputation models; the
// prediction model is left bit-exactly unchanged.
void train_phi(TrainState& state, const SplitBundle& data);

struct TrainResult {
    FactorModel model;  // best-on-validation checkpoint
    double best_val_auc = 0.0;
    int best_iter = -1;
    int outer_done = 0;
    double final_gap_full = 0.0;  // post-hoc full-data constraint gap (balanced)
    double final_val_auc = 0.0;
};

// Alg. 2: per outer iteration run Alg. 1, then alternate balancing-weight and
// prediction-model steps on shared mini-batches; early stopping on validation
// AUC with the configured patience.
TrainResult train_full(TrainState& state, const SplitBundle& data);

// Full-data constraint gap of the current xi/theta (diagnostic, balanced only).
double full_data_gap(const TrainState& state, const SplitBundle& data);

const char* optim_rule_name(OptimRule r);
OptimRule parse_optim_rule(const std::string& name);

}  // namespace balrec
