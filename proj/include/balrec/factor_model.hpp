#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace balrec {

enum class Link { identity, sigmoid, softplus };

// Per-sample objective delta(target, output):
//   squared       (output - target)^2
//   cross_entropy -[t log y + (1-t) log(1-y)], t in {0,1}, y in (0,1)
//   linear        target * output   (building block for reweighted losses)
enum class Objective { squared, cross_entropy, linear };

// Flat parameter layout, documented order:
//   user_vecs (M x d, row-major) | item_vecs (N x d) | user_bias (M) |
//   item_bias (N) | global_bias.
using ParamVector = std::vector<double>;

// Embedding scorer used for every model role: prediction (theta), propensity
// (phi_p / phi_p1 / phi_p2), imputation (phi_e) and balancing (xi / xi_1 / xi_2).
// score(u, i) = link(<P_u, Q_i> + b_u + c_i + b0); sigmoid outputs are clipped
// below at clip_floor so inverse-propensity weights stay bounded.
struct FactorModel {
    int num_users = 0;
    int num_items = 0;
    int dim = 0;
    Link link = Link::identity;
    double clip_floor = 0.0;

    std::vector<double> user_vecs;
    std::vector<double> item_vecs;
    std::vector<double> user_bias;
    std::vector<double> item_bias;
    double global_bias = 0.0;

    // Embeddings ~ uniform(-a, a) with a = 0.1/sqrt(d); biases zero.
    static FactorModel init(int num_users, int num_items, int dim, Link link,
                            std::uint64_t seed, double clip_floor = 0.0);

    double raw_score(int user, int item) const;
    double score(int user, int item) const;

    std::size_t param_count() const {
        return static_cast<std::size_t>(num_users + num_items) * dim + num_users + num_items + 1;
    }
    ParamVector flatten() const;
    void unflatten(std::span<const double> params);
    // params += alpha * delta (delta in flat layout)
    void add_scaled(double alpha, std::span<const double> delta);
    bool all_finite() const;
};

struct WeightedSample {
    int user = 0;
    int item = 0;
    double target = 0.0;
    double weight = 1.0;
};

// One pair's error value and its derivative w.r.t. the raw score.
struct SampleError {
    double value = 0.0;
    double dvalue_draw = 0.0;
};
SampleError sample_error(const FactorModel& model, Objective objective, int user, int item,
                         double target);

// Linked output and its derivative w.r.t. the raw score.
struct ScoreEval {
    double out = 0.0;
    double dout_draw = 0.0;
};
ScoreEval score_eval(const FactorModel& model, int user, int item);

struct LossGrad {
    double value = 0.0;
    ParamVector grad;
};

// value = sum_j weight_j * delta(target_j, score(u_j, i_j)) + (l2/2)*||params||^2,
// grad its exact derivative through the link. Entries for untouched users/items
// are exactly zero (when l2 == 0).
LossGrad loss_grad(const FactorModel& model, std::span<const WeightedSample> batch,
                   Objective objective, double l2 = 0.0);

// Value-only evaluation of the same objective.
double loss_value(const FactorModel& model, std::span<const WeightedSample> batch,
                  Objective objective, double l2 = 0.0);

// How the phi model's output enters the lower loss multiplicatively.
enum class PhiTransform {
    reciprocal,      // term_j = weight_j * delta_j(theta) / phi_output_j
    identity_output  // term_j = weight_j * delta_j(theta) * phi_output_j
};

// Mixed second derivative for the bi-level step:
//   returns  d/dphi [ (d/dtheta L) . v ]
// for L = sum_j weight_j * delta(target_j, theta-score_j) * tau(phi-score_j).
// This is the backward-on-backward quantity the hypergradient needs.
ParamVector mixed_second_directional(const FactorModel& theta, Objective delta,
                                     const FactorModel& phi, PhiTransform tau,
                                     std::span<const WeightedSample> batch,
                                     std::span<const double> v);

// Directional derivative of the batch loss in theta:  (d/dtheta L) . v,
// with per-sample transform coefficients supplied by the caller.
double theta_grad_dot(const FactorModel& theta, Objective delta,
                      std::span<const WeightedSample> batch,
                      std::span<const double> coeff, std::span<const double> v);

// grad += g * d raw_score(user, item) / d params, in the flat layout.
void scatter_raw_grad(const FactorModel& model, int user, int item, double g,
                      std::span<double> grad);

// Plain-text checkpoint: header "FACTOR v1 M N d link clip", then the
// parameter blocks in flat-layout order.
void save_checkpoint(const FactorModel& model, const std::string& path);
FactorModel load_checkpoint(const std::string& path);

const char* link_name(Link link);
Link parse_link(const std::string& name);

}  // namespace balrec
