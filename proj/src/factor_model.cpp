#include "balrec/factor_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "balrec/errors.hpp"

namespace balrec {

namespace {

double sigmoid(double x) {
    if (x >= 0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

struct LinkEval {
    double out;
    double dout_draw;
};

LinkEval eval_link(Link link, double clip_floor, double raw) {
    switch (link) {
        case Link::identity:
            return {raw, 1.0};
        case Link::sigmoid: {
            const double s = sigmoid(raw);
            if (s <= clip_floor) return {clip_floor, 0.0};
            return {s, s * (1.0 - s)};
        }
        case Link::softplus:
            return {softplus(raw), sigmoid(raw)};
    }
    throw ContractError("unknown link");
}

struct SampleEval {
    double value;
    double dvalue_draw;  // derivative of delta w.r.t. the raw score
};

SampleEval eval_sample(const FactorModel& m, Objective obj, double raw, double target) {
    // Stable fused path: CE through an unclipped sigmoid never forms log(0).
    if (obj == Objective::cross_entropy && m.link == Link::sigmoid && m.clip_floor == 0.0) {
        return {softplus(raw) - target * raw, sigmoid(raw) - target};
    }
    const LinkEval le = eval_link(m.link, m.clip_floor, raw);
    switch (obj) {
        case Objective::squared: {
            const double d = le.out - target;
            return {d * d, 2.0 * d * le.dout_draw};
        }
        case Objective::cross_entropy: {
            if (le.out <= 0.0 || le.out >= 1.0)
                throw ContractError("cross-entropy needs outputs in (0,1)");
            const double v = -(target * std::log(le.out) +
                               (1.0 - target) * std::log1p(-le.out));
            const double dv = (le.out - target) / (le.out * (1.0 - le.out));
            return {v, dv * le.dout_draw};
        }
        case Objective::linear:
            return {target * le.out, target * le.dout_draw};
    }
    throw ContractError("unknown objective");
}

}  // namespace

SampleError sample_error(const FactorModel& model, Objective objective, int user, int item,
                         double target) {
    const SampleEval ev = eval_sample(model, objective, model.raw_score(user, item), target);
    return {ev.value, ev.dvalue_draw};
}

ScoreEval score_eval(const FactorModel& model, int user, int item) {
    const LinkEval le = eval_link(model.link, model.clip_floor, model.raw_score(user, item));
    return {le.out, le.dout_draw};
}

FactorModel FactorModel::init(int num_users, int num_items, int dim, Link link,
                              std::uint64_t seed, double clip_floor) {
    if (num_users < 1 || num_items < 1) throw ContractError("init_model: need users and items");
    if (dim < 1) throw ContractError("init_model: dim must be >= 1");
    FactorModel m;
    m.num_users = num_users;
    m.num_items = num_items;
    m.dim = dim;
    m.link = link;
    m.clip_floor = clip_floor;
    m.user_vecs.resize(static_cast<std::size_t>(num_users) * dim);
    m.item_vecs.resize(static_cast<std::size_t>(num_items) * dim);
    m.user_bias.assign(num_users, 0.0);
    m.item_bias.assign(num_items, 0.0);
    const double scale = 0.1 / std::sqrt(static_cast<double>(dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& x : m.user_vecs) x = dist(rng);
    for (auto& x : m.item_vecs) x = dist(rng);
    return m;
}

double FactorModel::raw_score(int user, int item) const {
    if (user < 0 || user >= num_users || item < 0 || item >= num_items)
        throw ContractError("score: index out of range");
    const double* p = &user_vecs[static_cast<std::size_t>(user) * dim];
    const double* q = &item_vecs[static_cast<std::size_t>(item) * dim];
    double dot = 0.0;
    for (int k = 0; k < dim; ++k) dot += p[k] * q[k];
    return dot + user_bias[user] + item_bias[item] + global_bias;
}

double FactorModel::score(int user, int item) const {
    return eval_link(link, clip_floor, raw_score(user, item)).out;
}

ParamVector FactorModel::flatten() const {
    ParamVector out;
    out.reserve(param_count());
    out.insert(out.end(), user_vecs.begin(), user_vecs.end());
    out.insert(out.end(), item_vecs.begin(), item_vecs.end());
    out.insert(out.end(), user_bias.begin(), user_bias.end());
    out.insert(out.end(), item_bias.begin(), item_bias.end());
    out.push_back(global_bias);
    return out;
}

void FactorModel::unflatten(std::span<const double> params) {
    if (params.size() != param_count()) throw ContractError("unflatten: size mismatch");
    const double* p = params.data();
    std::copy(p, p + user_vecs.size(), user_vecs.begin());
    p += user_vecs.size();
    std::copy(p, p + item_vecs.size(), item_vecs.begin());
    p += item_vecs.size();
    std::copy(p, p + user_bias.size(), user_bias.begin());
    p += user_bias.size();
    std::copy(p, p + item_bias.size(), item_bias.begin());
    p += item_bias.size();
    global_bias = *p;
}

void FactorModel::add_scaled(double alpha, std::span<const double> delta) {
    if (delta.size() != param_count()) throw ContractError("add_scaled: size mismatch");
    const double* p = delta.data();
    for (auto& x : user_vecs) x += alpha * *p++;
    for (auto& x : item_vecs) x += alpha * *p++;
    for (auto& x : user_bias) x += alpha * *p++;
    for (auto& x : item_bias) x += alpha * *p++;
    global_bias += alpha * *p;
}

bool FactorModel::all_finite() const {
    for (double x : user_vecs)
        if (!std::isfinite(x)) return false;
    for (double x : item_vecs)
        if (!std::isfinite(x)) return false;
    for (double x : user_bias)
        if (!std::isfinite(x)) return false;
    for (double x : item_bias)
        if (!std::isfinite(x)) return false;
    return std::isfinite(global_bias);
}

namespace {

// Offsets into the flat layout.
struct Layout {
    std::size_t item_off, ub_off, ib_off, gb_off;
    explicit Layout(const FactorModel& m) {
        item_off = m.user_vecs.size();
        ub_off = item_off + m.item_vecs.size();
        ib_off = ub_off + m.user_bias.size();
        gb_off = ib_off + m.item_bias.size();
    }
};

void scatter(const FactorModel& m, const Layout& L, int u, int i, double g,
             std::span<double> grad) {
    const double* p = &m.user_vecs[static_cast<std::size_t>(u) * m.dim];
    const double* q = &m.item_vecs[static_cast<std::size_t>(i) * m.dim];
    double* gp = grad.data() + static_cast<std::size_t>(u) * m.dim;
    double* gq = grad.data() + L.item_off + static_cast<std::size_t>(i) * m.dim;
    for (int k = 0; k < m.dim; ++k) {
        gp[k] += g * q[k];
        gq[k] += g * p[k];
    }
    grad[L.ub_off + u] += g;
    grad[L.ib_off + i] += g;
    grad[L.gb_off] += g;
}

// Directional score derivative  (d raw_score / d params) . v  for one pair.
double raw_dot(const FactorModel& m, const Layout& L, int u, int i,
               std::span<const double> v) {
    const double* p = &m.user_vecs[static_cast<std::size_t>(u) * m.dim];
    const double* q = &m.item_vecs[static_cast<std::size_t>(i) * m.dim];
    const double* vp = v.data() + static_cast<std::size_t>(u) * m.dim;
    const double* vq = v.data() + L.item_off + static_cast<std::size_t>(i) * m.dim;
    double acc = 0.0;
    for (int k = 0; k < m.dim; ++k) acc += q[k] * vp[k] + p[k] * vq[k];
    return acc + v[L.ub_off + u] + v[L.ib_off + i] + v[L.gb_off];
}

}  // namespace

void scatter_raw_grad(const FactorModel& model, int user, int item, double g,
                      std::span<double> grad) {
    scatter(model, Layout(model), user, item, g, grad);
}

LossGrad loss_grad(const FactorModel& model, std::span<const WeightedSample> batch,
                   Objective objective, double l2) {
    LossGrad out;
    out.grad.assign(model.param_count(), 0.0);
    const Layout L(model);
    for (const auto& s : batch) {
        if (!std::isfinite(s.weight)) throw ContractError("loss_grad: non-finite weight");
        const double raw = model.raw_score(s.user, s.item);
        const SampleEval ev = eval_sample(model, objective, raw, s.target);
        const double term = s.weight * ev.value;
        if (!std::isfinite(term))
            throw NumericError("loss_grad: non-finite term at user=" + std::to_string(s.user) +
                               " item=" + std::to_string(s.item));
        out.value += term;
        scatter(model, L, s.user, s.item, s.weight * ev.dvalue_draw, out.grad);
    }
    if (l2 != 0.0) {
        const ParamVector flat = model.flatten();
        double sq = 0.0;
        for (std::size_t k = 0; k < flat.size(); ++k) {
            sq += flat[k] * flat[k];
            out.grad[k] += l2 * flat[k];
        }
        out.value += 0.5 * l2 * sq;
    }
    return out;
}

double loss_value(const FactorModel& model, std::span<const WeightedSample> batch,
                  Objective objective, double l2) {
    double value = 0.0;
    for (const auto& s : batch) {
        const double raw = model.raw_score(s.user, s.item);
        const SampleEval ev = eval_sample(model, objective, raw, s.target);
        const double term = s.weight * ev.value;
        if (!std::isfinite(term))
            throw NumericError("loss_value: non-finite term at user=" + std::to_string(s.user) +
                               " item=" + std::to_string(s.item));
        value += term;
    }
    if (l2 != 0.0) {
        const ParamVector flat = model.flatten();
        double sq = 0.0;
        for (double x : flat) sq += x * x;
        value += 0.5 * l2 * sq;
    }
    return value;
}

double theta_grad_dot(const FactorModel& theta, Objective delta,
                      std::span<const WeightedSample> batch,
                      std::span<const double> coeff, std::span<const double> v) {
    if (v.size() != theta.param_count()) throw ContractError("theta_grad_dot: v size mismatch");
    if (!coeff.empty() && coeff.size() != batch.size())
        throw ContractError("theta_grad_dot: coeff size mismatch");
    const Layout L(theta);
    double acc = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto& s = batch[j];
        const double raw = theta.raw_score(s.user, s.item);
        const SampleEval ev = eval_sample(theta, delta, raw, s.target);
        const double c = coeff.empty() ? 1.0 : coeff[j];
        acc += s.weight * c * ev.dvalue_draw * raw_dot(theta, L, s.user, s.item, v);
    }
    return acc;
}

ParamVector mixed_second_directional(const FactorModel& theta, Objective delta,
                                     const FactorModel& phi, PhiTransform tau,
                                     std::span<const WeightedSample> batch,
                                     std::span<const double> v) {
    if (v.size() != theta.param_count())
        throw ContractError("mixed_second_directional: v size mismatch");
    ParamVector grad(phi.param_count(), 0.0);
    const Layout Lt(theta);
    const Layout Lp(phi);
    for (const auto& s : batch) {
        const double raw_t = theta.raw_score(s.user, s.item);
        const SampleEval ev = eval_sample(theta, delta, raw_t, s.target);
        // t_j = (d/dtheta delta_j) . v restricted to the touched rows
        const double tj = ev.dvalue_draw * raw_dot(theta, Lt, s.user, s.item, v);
        const double raw_p = phi.raw_score(s.user, s.item);
        const LinkEval pe = eval_link(phi.link, phi.clip_floor, raw_p);
        double dtau_draw;
        if (tau == PhiTransform::reciprocal)
            dtau_draw = -pe.dout_draw / (pe.out * pe.out);
        else
            dtau_draw = pe.dout_draw;
        scatter(phi, Lp, s.user, s.item, s.weight * tj * dtau_draw, grad);
    }
    return grad;
}

void save_checkpoint(const FactorModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
    out << "FACTOR v1 " << m.num_users << ' ' << m.num_items << ' ' << m.dim << ' '
        << link_name(m.link) << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", m.clip_floor);
    out << buf << '\n';
    auto write_block = [&](const std::vector<double>& xs, int per_line) {
        int col = 0;
        for (double x : xs) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            out << buf;
            if (++col == per_line) {
                out << '\n';
                col = 0;
            } else {
                out << ' ';
            }
        }
        if (col != 0) out << '\n';
    };
    write_block(m.user_vecs, m.dim);
    write_block(m.item_vecs, m.dim);
    write_block(m.user_bias, 8);
    write_block(m.item_bias, 8);
    std::snprintf(buf, sizeof(buf), "%.17g", m.global_bias);
    out << buf << '\n';
}

FactorModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    std::string magic, version, link;
    FactorModel m;
    in >> magic >> version >> m.num_users >> m.num_items >> m.dim >> link >> m.clip_floor;
    if (!in || magic != "FACTOR" || version != "v1")
        throw ParseError(path + ": bad checkpoint header");
    if (m.num_users < 1 || m.num_items < 1 || m.dim < 1)
        throw ParseError(path + ": bad checkpoint dimensions");
    m.link = parse_link(link);
    m.user_vecs.resize(static_cast<std::size_t>(m.num_users) * m.dim);
    m.item_vecs.resize(static_cast<std::size_t>(m.num_items) * m.dim);
    m.user_bias.resize(m.num_users);
    m.item_bias.resize(m.num_items);
    for (auto& x : m.user_vecs) in >> x;
    for (auto& x : m.item_vecs) in >> x;
    for (auto& x : m.user_bias) in >> x;
    for (auto& x : m.item_bias) in >> x;
    in >> m.global_bias;
    if (!in) throw ParseError(path + ": truncated checkpoint");
    return m;
}

const char* link_name(Link link) {
    switch (link) {
        case Link::identity: return "identity";
        case Link::sigmoid: return "sigmoid";
        case Link::softplus: return "softplus";
    }
    return "?";
}

Link parse_link(const std::string& name) {
    if (name == "identity") return Link::identity;
    if (name == "sigmoid") return Link::sigmoid;
    if (name == "softplus") return Link::softplus;
    throw ParseError("unknown link: " + name);
}

}  // namespace balrec
