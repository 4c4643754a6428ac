#pragma once
// Multi-task network trained once for a whole family of task weightings.
// The trunk is a plain MLP over [features, one-hot group]; every trunk layer
// is modulated by a FiLM block whose scale/shift are affine in u = log(lambda),
// so one set of weights serves every task-weight vector lambda:
//
//     z = W a + b,   gamma = Gw u + Gb,   beta = Bw u + Bb,
//     h = gamma .* z + beta,   a' = act(h)
//
// Heads are linear readouts of the final representation; binary-score heads
// apply a sigmoid. Training draws a fresh lambda ~ U(lambda_min, lambda_max)
// per minibatch and follows the exact gradient of the lambda-weighted
// squared loss (both task types use squared error), derived by hand below.
// At inference the conditioning lambda is picked on a validation grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairmtl/data.hpp"
#include "fairmtl/errors.hpp"
#include "fairmtl/rng.hpp"
#include "fairmtl/types.hpp"

namespace fairmtl {

enum class Activation { tanh_act, relu, identity };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::tanh_act: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    fail(errc::invalid_config, "unknown activation");
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    fail(errc::invalid_config, "unknown activation '" + s + "'");
}

struct HeadSpec {
    TaskKind kind = TaskKind::regression;
    std::size_t label = 0;  // which dataset label column (0 = y1, 1 = y2) this head predicts
};

struct NetworkConfig {
    std::size_t feature_dim = 0;
    std::vector<GroupLabel> groups;     // one-hot vocabulary, sorted ascending
    std::vector<std::size_t> hidden;    // hidden widths before the representation layer
    std::size_t repr_dim = 8;
    std::vector<HeadSpec> heads;
    Activation activation = Activation::tanh_act;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return feature_dim + groups.size(); }

    void validate() const {
        if (feature_dim == 0) fail(errc::invalid_config, "network needs feature_dim >= 1");
        if (groups.empty()) fail(errc::invalid_config, "network needs at least one group");
        if (!std::is_sorted(groups.begin(), groups.end()) ||
            std::adjacent_find(groups.begin(), groups.end()) != groups.end())
            fail(errc::invalid_config, "network groups must be sorted and distinct");
        for (std::size_t h : hidden)
            if (h == 0) fail(errc::invalid_config, "hidden layer width must be >= 1");
        if (repr_dim == 0) fail(errc::invalid_config, "representation width must be >= 1");
        if (heads.empty()) fail(errc::invalid_config, "network needs at least one head");
        for (const HeadSpec& h : heads)
            if (h.label >= 2) fail(errc::invalid_config, "head label index must be 0 or 1");
    }
};

struct BlockInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

struct BackpropResult {
    double loss = 0.0;
    std::vector<double> gradients;  // aligned with MtlNetwork::parameters()
};

namespace detail {

inline double clamp_score(double p) {
    static const double ceil = std::nextafter(1.0, 0.0);
    return std::clamp(p, std::numeric_limits<double>::min(), ceil);
}

}  // namespace detail

class MtlNetwork {
public:
    MtlNetwork() = default;

    explicit MtlNetwork(NetworkConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        const std::size_t tasks = cfg_.heads.size();
        std::vector<std::size_t> dims;
        dims.push_back(cfg_.input_dim());
        for (std::size_t h : cfg_.hidden) dims.push_back(h);
        dims.push_back(cfg_.repr_dim);

        Rng rng(mix_seed(cfg_.seed, 0x171u));
        trunk_.reserve(dims.size() - 1);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            Layer layer;
            layer.in = dims[l];
            layer.out = dims[l + 1];
            const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
            layer.w.resize(layer.out * layer.in);
            for (double& v : layer.w) v = rng.uniform(-a, a);
            layer.b.assign(layer.out, 0.0);
            // FiLM generators start inactive: gamma = 1, beta = 0 for every lambda
            layer.gw.assign(layer.out * tasks, 0.0);
            layer.gb.assign(layer.out, 1.0);
            layer.bw.assign(layer.out * tasks, 0.0);
            layer.bb.assign(layer.out, 0.0);
            trunk_.push_back(std::move(layer));
        }
        heads_.resize(tasks);
        for (Head& h : heads_) {
            const double a = std::sqrt(6.0 / static_cast<double>(cfg_.repr_dim + 1));
            h.w.resize(cfg_.repr_dim);
            for (double& v : h.w) v = rng.uniform(-a, a);
            h.b = 0.0;
        }
    }

    const NetworkConfig& config() const { return cfg_; }
    std::size_t task_count() const { return heads_.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        const std::size_t tasks = heads_.size();
        for (const Layer& l : trunk_) n += l.out * l.in + l.out + 2 * (l.out * tasks + l.out);
        n += tasks * (cfg_.repr_dim + 1);
        return n;
    }

    std::vector<BlockInfo> parameter_blocks() const {
        std::vector<BlockInfo> blocks;
        std::size_t off = 0;
        const std::size_t tasks = heads_.size();
        for (std::size_t l = 0; l < trunk_.size(); ++l) {
            const std::string p = "trunk" + std::to_string(l) + ".";
            const Layer& L = trunk_[l];
            auto add = [&](const std::string& name, std::size_t size) {
                blocks.push_back({p + name, off, size});
                off += size;
            };
            add("w", L.out * L.in);
            add("b", L.out);
            add("film_scale_w", L.out * tasks);
            add("film_scale_b", L.out);
            add("film_shift_w", L.out * tasks);
            add("film_shift_b", L.out);
        }
        for (std::size_t t = 0; t < heads_.size(); ++t) {
            blocks.push_back({"head" + std::to_string(t) + ".w", off, cfg_.repr_dim});
            off += cfg_.repr_dim;
            blocks.push_back({"head" + std::to_string(t) + ".b", off, 1});
            off += 1;
        }
        return blocks;
    }

    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        visit(*this, [&](const double& v) { p.push_back(v); });
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count())
            fail(errc::shape_error, "parameter vector has wrong length");
        std::size_t i = 0;
        visit(*this, [&](double& v) { v = p[i++]; });
    }

    void apply_step(std::span<const double> grad, double lr) {
        if (grad.size() != parameter_count())
            fail(errc::shape_error, "gradient vector has wrong length");
        std::size_t i = 0;
        visit(*this, [&](double& v) { v -= lr * grad[i++]; });
    }

    // head outputs for one sample under conditioning weights lambda
    std::vector<double> forward(std::span<const double> x, GroupLabel s,
                                const std::vector<double>& lambda) const {
        Trace tr;
        forward_trace(x, s, lambda, tr);
        return tr.out;
    }

    // predictions for every dataset row: [task][sample]
    std::vector<std::vector<double>> predict(const Dataset& ds,
                                             const std::vector<double>& lambda) const {
        if (ds.feature_dim != cfg_.feature_dim)
            fail(errc::shape_error, "dataset feature width does not match the network");
        std::vector<std::vector<double>> out(heads_.size(), std::vector<double>(ds.size()));
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto p = forward(ds.row(i), ds.group[i], lambda);
            for (std::size_t t = 0; t < heads_.size(); ++t) out[t][i] = p[t];
        }
        return out;
    }

    // Exact gradient of the lambda-weighted squared loss over the batch.
    // Per present label: dL/dp = 2 lambda_t (p - y) / n_t; sigmoid heads add
    // p(1-p); then through each trunk layer, with dh = da .* act'(h):
    //   dGw += (dh .* z) u^T   dGb += dh .* z   dBw += dh u^T   dBb += dh
    //   dz = dh .* gamma       dW += dz a_prev^T   db += dz   da_prev = W^T dz
    // Masked labels contribute nothing; a batch with no labels at all yields
    // zero loss and zero gradients.
    BackpropResult backward(const Dataset& ds, std::span<const std::size_t> idx,
                            const std::vector<double>& lambda) const {
        if (ds.feature_dim != cfg_.feature_dim)
            fail(errc::shape_error, "dataset feature width does not match the network");
        validate_lambda(lambda);
        const std::size_t tasks = heads_.size();

        std::vector<double> n_t(tasks, 0.0);
        for (std::size_t t = 0; t < tasks; ++t) {
            std::size_t c = 0;
            for (std::size_t i : idx)
                if (ds.present[cfg_.heads[t].label][i]) ++c;
            n_t[t] = static_cast<double>(c);
        }

        BackpropResult res;
        res.gradients.assign(parameter_count(), 0.0);
        std::vector<double> task_sq(tasks, 0.0);

        const std::vector<BlockInfo> blocks = parameter_blocks();
        std::size_t bi = 0;
        struct LayerOff {
            std::size_t w, b, gw, gb, bw, bb;
        };
        std::vector<LayerOff> off(trunk_.size());
        for (std::size_t l = 0; l < trunk_.size(); ++l) {
            off[l].w = blocks[bi++].offset;
            off[l].b = blocks[bi++].offset;
            off[l].gw = blocks[bi++].offset;
            off[l].gb = blocks[bi++].offset;
            off[l].bw = blocks[bi++].offset;
            off[l].bb = blocks[bi++].offset;
        }
        std::vector<std::size_t> head_w(tasks), head_b(tasks);
        for (std::size_t t = 0; t < tasks; ++t) {
            head_w[t] = blocks[bi++].offset;
            head_b[t] = blocks[bi++].offset;
        }

        Trace tr;
        std::vector<double> delta, delta_prev;
        for (std::size_t i : idx) {
            bool any = false;
            for (std::size_t t = 0; t < tasks; ++t)
                if (ds.present[cfg_.heads[t].label][i]) any = true;
            if (!any) continue;

            forward_trace(ds.row(i), ds.group[i], lambda, tr);
            const std::vector<double>& aL = trunk_.empty() ? tr.a0 : tr.a.back();

            delta.assign(aL.size(), 0.0);
            for (std::size_t t = 0; t < tasks; ++t) {
                if (!ds.present[cfg_.heads[t].label][i]) continue;
                const double y = ds.labels[cfg_.heads[t].label][i];
                const double p = tr.out[t];
                const double r = p - y;
                task_sq[t] += r * r;
                double dout = 2.0 * lambda[t] * r / n_t[t];
                if (cfg_.heads[t].kind == TaskKind::binary_score) dout *= p * (1.0 - p);
                for (std::size_t k = 0; k < aL.size(); ++k) {
                    res.gradients[head_w[t] + k] += dout * aL[k];
                    delta[k] += dout * heads_[t].w[k];
                }
                res.gradients[head_b[t]] += dout;
            }

            for (std::size_t li = trunk_.size(); li-- > 0;) {
                const Layer& L = trunk_[li];
                const std::vector<double>& a_here = tr.a[li];
                const std::vector<double>& z = tr.z[li];
                const std::vector<double>& gamma = tr.gamma[li];
                const std::vector<double>& a_prev = (li == 0) ? tr.a0 : tr.a[li - 1];
                delta_prev.assign(L.in, 0.0);
                for (std::size_t r = 0; r < L.out; ++r) {
                    double dh = delta[r] * act_deriv(a_here[r]);
                    if (dh == 0.0) continue;
                    const double dhz = dh * z[r];
                    for (std::size_t t = 0; t < tasks; ++t) {
                        res.gradients[off[li].gw + r * tasks + t] += dhz * tr.u[t];
                        res.gradients[off[li].bw + r * tasks + t] += dh * tr.u[t];
                    }
                    res.gradients[off[li].gb + r] += dhz;
                    res.gradients[off[li].bb + r] += dh;
                    const double dz = dh * gamma[r];
                    for (std::size_t c = 0; c < L.in; ++c) {
                        res.gradients[off[li].w + r * L.in + c] += dz * a_prev[c];
                        delta_prev[c] += dz * L.w[r * L.in + c];
                    }
                    res.gradients[off[li].b + r] += dz;
                }
                delta.swap(delta_prev);
            }
        }

        res.loss = 0.0;
        for (std::size_t t = 0; t < tasks; ++t)
            if (n_t[t] > 0.0) res.loss += lambda[t] * task_sq[t] / n_t[t];
        if (!std::isfinite(res.loss))
            fail(errc::numerical_error, "loss is not finite");
        return res;
    }

    std::optional<double> final_training_loss;

    nlohmann::json to_json() const {
        nlohmann::json cfg;
        cfg["feature_dim"] = cfg_.feature_dim;
        cfg["groups"] = cfg_.groups;
        cfg["hidden"] = cfg_.hidden;
        cfg["repr_dim"] = cfg_.repr_dim;
        nlohmann::json heads = nlohmann::json::array();
        for (const HeadSpec& h : cfg_.heads)
            heads.push_back({{"kind", to_string(h.kind)}, {"label", h.label}});
        cfg["heads"] = heads;
        cfg["activation"] = to_string(cfg_.activation);
        cfg["seed"] = cfg_.seed;
        nlohmann::json j;
        j["version"] = 1;
        j["kind"] = "mtl-network";
        j["config"] = std::move(cfg);
        j["parameters"] = parameters();
        if (final_training_loss)
            j["final_training_loss"] = *final_training_loss;
        else
            j["final_training_loss"] = nullptr;
        return j;
    }

    static MtlNetwork from_json(const nlohmann::json& j) {
        try {
            if (j.at("version").get<int>() != 1)
                fail(errc::schema_error, "unsupported network version");
            const nlohmann::json& c = j.at("config");
            NetworkConfig cfg;
            cfg.feature_dim = c.at("feature_dim").get<std::size_t>();
            cfg.groups = c.at("groups").get<std::vector<GroupLabel>>();
            cfg.hidden = c.at("hidden").get<std::vector<std::size_t>>();
            cfg.repr_dim = c.at("repr_dim").get<std::size_t>();
            for (const auto& h : c.at("heads")) {
                HeadSpec spec;
                spec.kind = task_kind_from_string(h.at("kind").get<std::string>());
                spec.label = h.at("label").get<std::size_t>();
                cfg.heads.push_back(spec);
            }
            cfg.activation = activation_from_string(c.at("activation").get<std::string>());
            cfg.seed = c.at("seed").get<std::uint64_t>();
            MtlNetwork net(cfg);
            const auto params = j.at("parameters").get<std::vector<double>>();
            net.set_parameters(params);
            if (!j.at("final_training_loss").is_null())
                net.final_training_loss = j.at("final_training_loss").get<double>();
            return net;
        } catch (const nlohmann::json::exception& e) {
            fail(errc::schema_error, std::string("malformed network JSON: ") + e.what());
        }
    }

private:
    struct Layer {
        std::size_t in = 0, out = 0;
        std::vector<double> w, b;    // affine part
        std::vector<double> gw, gb;  // FiLM scale generator (out x tasks, out)
        std::vector<double> bw, bb;  // FiLM shift generator
    };
    struct Head {
        std::vector<double> w;
        double b = 0.0;
    };

    struct Trace {
        std::vector<double> a0, u;
        std::vector<std::vector<double>> z, gamma, a;
        std::vector<double> out;
    };

    template <class Self, class F>
    static void visit(Self& self, F&& f) {
        for (auto& L : self.trunk_) {
            for (auto& v : L.w) f(v);
            for (auto& v : L.b) f(v);
            for (auto& v : L.gw) f(v);
            for (auto& v : L.gb) f(v);
            for (auto& v : L.bw) f(v);
            for (auto& v : L.bb) f(v);
        }
        for (auto& h : self.heads_) {
            for (auto& v : h.w) f(v);
            f(h.b);
        }
    }

    void validate_lambda(const std::vector<double>& lambda) const {
        if (lambda.size() != heads_.size())
            fail(errc::shape_error, "one conditioning weight per task required");
        for (double l : lambda)
            if (!(l > 0.0) || !std::isfinite(l))
                fail(errc::invalid_config, "task weights must be positive and finite");
    }

    double act(double h) const {
        switch (cfg_.activation) {
            case Activation::tanh_act: return std::tanh(h);
            case Activation::relu: return h > 0.0 ? h : 0.0;
            case Activation::identity: return h;
        }
        return h;
    }

    // derivative expressed through the activation value (valid for all three)
    double act_deriv(double a) const {
        switch (cfg_.activation) {
            case Activation::tanh_act: return 1.0 - a * a;
            case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
            case Activation::identity: return 1.0;
        }
        return 1.0;
    }

    void forward_trace(std::span<const double> x, GroupLabel s, const std::vector<double>& lambda,
                       Trace& tr) const {
        if (x.size() != cfg_.feature_dim)
            fail(errc::shape_error, "input feature width does not match the network");
        validate_lambda(lambda);
        const auto git = std::lower_bound(cfg_.groups.begin(), cfg_.groups.end(), s);
        if (git == cfg_.groups.end() || *git != s)
            fail(errc::unknown_group, "group " + std::to_string(s) + " is not in the network vocabulary");
        const std::size_t gi = static_cast<std::size_t>(git - cfg_.groups.begin());
        const std::size_t tasks = heads_.size();

        tr.a0.assign(cfg_.input_dim(), 0.0);
        std::copy(x.begin(), x.end(), tr.a0.begin());
        tr.a0[cfg_.feature_dim + gi] = 1.0;
        tr.u.resize(tasks);
        for (std::size_t t = 0; t < tasks; ++t) tr.u[t] = std::log(lambda[t]);

        tr.z.resize(trunk_.size());
        tr.gamma.resize(trunk_.size());
        tr.a.resize(trunk_.size());
        const std::vector<double>* prev = &tr.a0;
        for (std::size_t li = 0; li < trunk_.size(); ++li) {
            const Layer& L = trunk_[li];
            tr.z[li].assign(L.out, 0.0);
            tr.gamma[li].assign(L.out, 0.0);
            tr.a[li].assign(L.out, 0.0);
            for (std::size_t r = 0; r < L.out; ++r) {
                double z = L.b[r];
                for (std::size_t c = 0; c < L.in; ++c) z += L.w[r * L.in + c] * (*prev)[c];
                double gamma = L.gb[r];
                double beta = L.bb[r];
                for (std::size_t t = 0; t < tasks; ++t) {
                    gamma += L.gw[r * tasks + t] * tr.u[t];
                    beta += L.bw[r * tasks + t] * tr.u[t];
                }
                tr.z[li][r] = z;
                tr.gamma[li][r] = gamma;
                tr.a[li][r] = act(gamma * z + beta);
            }
            prev = &tr.a[li];
        }

        tr.out.resize(tasks);
        for (std::size_t t = 0; t < tasks; ++t) {
            const Head& h = heads_[t];
            double o = h.b;
            for (std::size_t k = 0; k < h.w.size(); ++k) o += h.w[k] * (*prev)[k];
            tr.out[t] = (cfg_.heads[t].kind == TaskKind::binary_score)
                            ? detail::clamp_score(sigmoid(o))
                            : o;
        }
    }

    NetworkConfig cfg_;
    std::vector<Layer> trunk_;
    std::vector<Head> heads_;
};

// ---------------------------------------------------------------------------
// loss (standalone form used for reporting and testing)

// Weighted multi-task squared loss: sum_t lambda_t * mean over unmasked
// samples of (p - y)^2. Tasks with every label masked contribute nothing;
// if no task has any label the loss is undefined.
inline double weighted_multitask_loss(const std::vector<std::vector<double>>& predictions,
                                      const std::vector<std::vector<double>>& labels,
                                      const std::vector<std::vector<std::uint8_t>>& mask,
                                      const std::vector<double>& lambda) {
    const std::size_t tasks = predictions.size();
    if (tasks == 0 || labels.size() != tasks || mask.size() != tasks || lambda.size() != tasks)
        fail(errc::shape_error, "loss inputs must have one row per task");
    for (double l : lambda)
        if (!(l > 0.0) || !std::isfinite(l))
            fail(errc::invalid_config, "task weights must be positive and finite");
    double loss = 0.0;
    bool any = false;
    for (std::size_t t = 0; t < tasks; ++t) {
        const std::size_t n = predictions[t].size();
        if (labels[t].size() != n || mask[t].size() != n)
            fail(errc::shape_error, "loss rows must have equal lengths per task");
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask[t][i]) continue;
            const double r = predictions[t][i] - labels[t][i];
            acc += r * r;
            ++cnt;
        }
        if (cnt == 0) continue;
        any = true;
        loss += lambda[t] * acc / static_cast<double>(cnt);
    }
    if (!any) fail(errc::no_labels, "every label of every task is masked");
    return loss;
}

// ---------------------------------------------------------------------------
// training

struct YotoConfig {
    double lambda_min = 0.5;  // lower bound of the task-weight sampling box
    double lambda_max = 2.0;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double learning_rate = 0.05;
    // candidate lambda vectors for post-training calibration; entries must
    // stay inside [lambda_min, lambda_max]
    std::vector<std::vector<double>> validation_grid;

    void validate(std::size_t tasks) const {
        if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !std::isfinite(lambda_max))
            fail(errc::invalid_config, "need 0 < lambda_min <= lambda_max");
        if (batch_size == 0) fail(errc::invalid_config, "batch size must be >= 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            fail(errc::invalid_config, "learning rate must be positive and finite");
        for (const auto& lam : validation_grid) {
            if (lam.size() != tasks)
                fail(errc::invalid_config, "grid entries must have one weight per task");
            for (double l : lam)
                if (!(l >= lambda_min && l <= lambda_max))
                    fail(errc::invalid_config,
                         "grid weights must lie inside [lambda_min, lambda_max]");
        }
    }
};

// Log-spaced per-task ladder crossed over tasks; used when a config does not
// pin an explicit calibration grid.
inline std::vector<std::vector<double>> default_validation_grid(const YotoConfig& yoto,
                                                                std::size_t tasks,
                                                                std::size_t points = 5) {
    std::vector<double> ladder;
    if (yoto.lambda_max == yoto.lambda_min || points == 1) {
        ladder.push_back(yoto.lambda_min);
    } else {
        const double lo = std::log(yoto.lambda_min), hi = std::log(yoto.lambda_max);
        for (std::size_t i = 0; i < points; ++i) {
            double v = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                         static_cast<double>(points - 1));
            ladder.push_back(std::clamp(v, yoto.lambda_min, yoto.lambda_max));
        }
        ladder.front() = yoto.lambda_min;
        ladder.back() = yoto.lambda_max;
    }
    std::vector<std::vector<double>> grid{{}};
    for (std::size_t t = 0; t < tasks; ++t) {
        std::vector<std::vector<double>> next;
        for (const auto& partial : grid)
            for (double v : ladder) {
                auto e = partial;
                e.push_back(v);
                next.push_back(std::move(e));
            }
        grid = std::move(next);
    }
    return grid;
}

// Minibatch gradient descent with a fresh lambda ~ U(lambda_min, lambda_max)
// per batch (drawn per task). Deterministic given the network seed: shuffles
// and lambda draws come from one stream derived from it.
inline MtlNetwork train(MtlNetwork net, const Dataset& ds, const YotoConfig& yoto) {
    ds.validate();
    yoto.validate(net.task_count());
    if (ds.size() == 0) fail(errc::empty_sample, "training set is empty");
    if (ds.feature_dim != net.config().feature_dim)
        fail(errc::shape_error, "dataset feature width does not match the network");
    for (GroupLabel g : ds.distinct_groups())
        if (!std::binary_search(net.config().groups.begin(), net.config().groups.end(), g))
            fail(errc::unknown_group, "group " + std::to_string(g) + " is not in the network vocabulary");
    for (std::size_t t = 0; t < net.task_count(); ++t) {
        const std::size_t col = net.config().heads[t].label;
        bool any = false;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.present[col][i]) any = true;
        if (!any)
            fail(errc::no_labels, "task " + std::to_string(t) + " has no labels in the training set");
    }

    Rng rng(mix_seed(net.config().seed, 0x7eau));
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> lambda(net.task_count());

    for (std::size_t epoch = 0; epoch < yoto.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += yoto.batch_size) {
            const std::size_t stop = std::min(start + yoto.batch_size, order.size());
            for (double& l : lambda) l = rng.uniform(yoto.lambda_min, yoto.lambda_max);
            BackpropResult res;
            try {
                res = net.backward(ds, std::span(order).subspan(start, stop - start), lambda);
            } catch (const Error& e) {
                if (e.code() == errc::numerical_error)
                    fail(errc::numerical_error,
                         "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
                throw;
            }
            net.apply_step(res.gradients, yoto.learning_rate);
            loss_sum += res.loss;
            ++batches;
        }
        if (epoch + 1 == yoto.epochs && batches > 0)
            net.final_training_loss = loss_sum / static_cast<double>(batches);
    }
    return net;
}

// ---------------------------------------------------------------------------
// lambda calibration

enum class CalibrationObjective { regression_only, both_tasks };

inline const char* to_string(CalibrationObjective o) {
    switch (o) {
        case CalibrationObjective::regression_only: return "regression";
        case CalibrationObjective::both_tasks: return "both";
    }
    fail(errc::invalid_config, "unknown calibration objective");
}

inline CalibrationObjective objective_from_string(const std::string& s) {
    if (s == "regression") return CalibrationObjective::regression_only;
    if (s == "both") return CalibrationObjective::both_tasks;
    fail(errc::invalid_config, "unknown calibration objective '" + s + "'");
}

// Picks the grid entry with the best validation squared error. "regression"
// averages the error of regression heads only; "both" min-max normalizes each
// task's error across the grid and averages, so neither task's scale
// dominates. Ties resolve to the earliest grid entry; tasks without any
// validation label are ignored.
inline std::vector<double> calibrate_lambda(const MtlNetwork& net, const Dataset& val,
                                            const std::vector<std::vector<double>>& grid,
                                            CalibrationObjective objective) {
    val.validate();
    if (grid.empty()) fail(errc::invalid_config, "calibration grid is empty");
    for (const auto& lam : grid) {
        if (lam.size() != net.task_count())
            fail(errc::invalid_config, "grid entries must have one weight per task");
        for (double l : lam)
            if (!(l > 0.0) || !std::isfinite(l))
                fail(errc::invalid_config, "task weights must be positive and finite");
    }
    if (val.size() == 0) fail(errc::empty_sample, "validation set is empty");

    const std::size_t tasks = net.task_count();
    std::vector<bool> has_data(tasks, false);
    std::vector<std::vector<double>> err(grid.size(), std::vector<double>(tasks, 0.0));
    for (std::size_t c = 0; c < grid.size(); ++c) {
        const auto preds = net.predict(val, grid[c]);
        for (std::size_t t = 0; t < tasks; ++t) {
            const std::size_t col = net.config().heads[t].label;
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < val.size(); ++i) {
                if (!val.present[col][i]) continue;
                const double r = preds[t][i] - val.labels[col][i];
                acc += r * r;
                ++cnt;
            }
            if (cnt > 0) {
                err[c][t] = acc / static_cast<double>(cnt);
                has_data[t] = true;
            }
        }
    }

    std::vector<std::size_t> used;
    for (std::size_t t = 0; t < tasks; ++t) {
        if (!has_data[t]) continue;
        if (objective == CalibrationObjective::regression_only &&
            net.config().heads[t].kind != TaskKind::regression)
            continue;
        used.push_back(t);
    }
    if (used.empty()) fail(errc::no_labels, "no task has validation labels for calibration");

    std::vector<double> score(grid.size(), 0.0);
    if (objective == CalibrationObjective::regression_only) {
        for (std::size_t c = 0; c < grid.size(); ++c)
            for (std::size_t t : used) score[c] += err[c][t] / static_cast<double>(used.size());
    } else {
        for (std::size_t t : used) {
            double lo = err[0][t], hi = err[0][t];
            for (std::size_t c = 1; c < grid.size(); ++c) {
                lo = std::min(lo, err[c][t]);
                hi = std::max(hi, err[c][t]);
            }
            for (std::size_t c = 0; c < grid.size(); ++c) {
                const double norm = (hi > lo) ? (err[c][t] - lo) / (hi - lo) : 0.0;
                score[c] += norm / static_cast<double>(used.size());
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < grid.size(); ++c)
        if (score[c] < score[best]) best = c;
    return grid[best];
}

}  // namespace fairmtl
