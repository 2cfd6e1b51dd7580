#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dilab/csv.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/linalg.hpp"
#include "dilab/rng.hpp"

namespace dilab {

enum class Activation { Relu, Tanh, Identity };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        default: return "identity";
    }
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    throw FormatError("unknown activation: " + std::string(s));
}

struct Layer {
    Matrix weights;            // out x in
    std::vector<double> bias;  // out
    Activation activation = Activation::Identity;
};

// Plain feed-forward network; layer count d is the number of weight matrices.
struct MlpModel {
    std::vector<Layer> layers;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

    // Largest layer width, the h of the perturbation bounds.
    std::size_t max_width() const {
        std::size_t h = input_dim();
        for (const Layer& l : layers) h = std::max(h, l.weights.rows());
        return h;
    }

    bool bias_free() const {
        for (const Layer& l : layers)
            for (double b : l.bias)
                if (b != 0.0) return false;
        return true;
    }

    bool same_architecture(const MlpModel& other) const {
        if (depth() != other.depth()) return false;
        for (std::size_t i = 0; i < depth(); ++i) {
            if (!layers[i].weights.same_shape(other.layers[i].weights)) return false;
            if (layers[i].activation != other.layers[i].activation) return false;
        }
        return true;
    }

    void validate() const {
        if (layers.empty()) throw ShapeError("MlpModel: depth >= 1 required");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i].bias.size() != layers[i].weights.rows())
                throw ShapeError("MlpModel: bias length mismatch");
            if (i > 0 && layers[i].weights.cols() != layers[i - 1].weights.rows())
                throw ShapeError("MlpModel: consecutive layer dimensions do not chain");
        }
    }
};

// Fan-in scaled uniform init, deterministic in the seed. The last layer is
// linear; hidden layers share one activation.
inline MlpModel make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t output_dim, Activation hidden_activation,
                         std::uint64_t seed, bool with_bias = true) {
    MlpModel f;
    Rng rng(derive_seed(seed, 0x1717));
    std::size_t in = input_dim;
    std::vector<std::size_t> widths = hidden;
    widths.push_back(output_dim);
    for (std::size_t li = 0; li < widths.size(); ++li) {
        Layer layer;
        layer.weights = Matrix(widths[li], in);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : layer.weights.data()) w = bound * (2.0 * rng.uniform() - 1.0);
        layer.bias.assign(widths[li], 0.0);
        if (with_bias)
            for (double& b : layer.bias) b = bound * (2.0 * rng.uniform() - 1.0);
        layer.activation =
            li + 1 == widths.size() ? Activation::Identity : hidden_activation;
        f.layers.push_back(std::move(layer));
        in = widths[li];
    }
    return f;
}

namespace nn {

inline double apply_activation(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        default: return z;
    }
}

inline double activation_grad(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        default: return 1.0;
    }
}

// Per-sample forward state for backprop: post[0] is the input, post[i] the
// activation after layer i, pre[i] the pre-activation of layer i.
struct ForwardCache {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

inline const std::vector<double>& forward_cached(const MlpModel& f, std::span<const double> x,
                                                 ForwardCache& cache) {
    if (x.size() != f.input_dim()) throw ShapeError("forward: input dimension mismatch");
    cache.pre.resize(f.depth());
    cache.post.resize(f.depth() + 1);
    cache.post[0].assign(x.begin(), x.end());
    for (std::size_t i = 0; i < f.depth(); ++i) {
        const Layer& l = f.layers[i];
        cache.pre[i] = l.weights.matvec(cache.post[i]);
        for (std::size_t r = 0; r < l.bias.size(); ++r) cache.pre[i][r] += l.bias[r];
        cache.post[i + 1].resize(cache.pre[i].size());
        for (std::size_t r = 0; r < cache.pre[i].size(); ++r)
            cache.post[i + 1][r] = apply_activation(l.activation, cache.pre[i][r]);
    }
    return cache.post.back();
}

struct GradBuffer {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;

    void reset(const MlpModel& f) {
        weights.resize(f.depth());
        bias.resize(f.depth());
        for (std::size_t i = 0; i < f.depth(); ++i) {
            weights[i] = Matrix(f.layers[i].weights.rows(), f.layers[i].weights.cols());
            bias[i].assign(f.layers[i].bias.size(), 0.0);
        }
    }
};

// Accumulates parameter gradients for one sample given dL/dlogits; returns
// dL/dinput (needed by PGD). The optional masks are the dropout scale
// factors applied to each hidden activation during the forward pass.
inline std::vector<double> backward(const MlpModel& f, const ForwardCache& cache,
                                    std::vector<double> dlogits, GradBuffer& grads,
                                    const std::vector<std::vector<double>>* masks = nullptr) {
    std::vector<double> delta = std::move(dlogits);
    for (std::size_t i = f.depth(); i-- > 0;) {
        const Layer& l = f.layers[i];
        if (masks && i + 1 < f.depth())
            for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= (*masks)[i][r];
        for (std::size_t r = 0; r < delta.size(); ++r)
            delta[r] *= activation_grad(l.activation, cache.pre[i][r]);
        const std::vector<double>& input = cache.post[i];
        Matrix& gw = grads.weights[i];
        for (std::size_t r = 0; r < l.weights.rows(); ++r) {
            const double dr = delta[r];
            grads.bias[i][r] += dr;
            for (std::size_t c = 0; c < l.weights.cols(); ++c)
                gw(r, c) += dr * input[c];
        }
        delta = l.weights.matvec_t(delta);
    }
    return delta;
}

// Forward pass with inverted-dropout masks on hidden activations. The mask
// entries are 0 (dropped) or 1/keep, drawn per unit per call.
inline const std::vector<double>& forward_dropout(const MlpModel& f, std::span<const double> x,
                                                  double dropout_rate, Rng& rng,
                                                  ForwardCache& cache,
                                                  std::vector<std::vector<double>>& masks) {
    if (x.size() != f.input_dim()) throw ShapeError("forward: input dimension mismatch");
    const double keep = 1.0 - dropout_rate;
    cache.pre.resize(f.depth());
    cache.post.resize(f.depth() + 1);
    masks.resize(f.depth() >= 1 ? f.depth() - 1 : 0);
    cache.post[0].assign(x.begin(), x.end());
    for (std::size_t i = 0; i < f.depth(); ++i) {
        const Layer& l = f.layers[i];
        cache.pre[i] = l.weights.matvec(cache.post[i]);
        for (std::size_t r = 0; r < l.bias.size(); ++r) cache.pre[i][r] += l.bias[r];
        cache.post[i + 1].resize(cache.pre[i].size());
        if (i + 1 < f.depth()) {
            masks[i].resize(cache.pre[i].size());
            for (std::size_t r = 0; r < cache.pre[i].size(); ++r) {
                masks[i][r] = rng.uniform() < dropout_rate ? 0.0 : 1.0 / keep;
                cache.post[i + 1][r] =
                    masks[i][r] * apply_activation(l.activation, cache.pre[i][r]);
            }
        } else {
            for (std::size_t r = 0; r < cache.pre[i].size(); ++r)
                cache.post[i + 1][r] = apply_activation(l.activation, cache.pre[i][r]);
        }
    }
    return cache.post.back();
}

inline void softmax(std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
}

// Cross-entropy loss and dL/dlogits for a class target.
inline double ce_loss_grad(const std::vector<double>& logits, std::size_t target,
                           std::vector<double>& dlogits) {
    dlogits = logits;
    softmax(dlogits);
    const double p = std::max(dlogits[target], 1e-300);
    const double loss = -std::log(p);
    dlogits[target] -= 1.0;
    return loss;
}

}  // namespace nn

inline std::vector<double> forward(const MlpModel& f, std::span<const double> x) {
    nn::ForwardCache cache;
    return nn::forward_cached(f, x, cache);
}

// {-1,+1} labels index the two logits as 0 and 1.
inline std::size_t label_to_class(int label) { return label > 0 ? 1 : 0; }

// True-class logit minus the best other logit.
inline double margin_nl(const MlpModel& f, std::span<const double> x, std::size_t y_class) {
    const auto logits = forward(f, x);
    if (y_class >= logits.size()) throw ShapeError("margin_nl: class index out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j)
        if (j != y_class) best_other = std::max(best_other, logits[j]);
    return logits[y_class] - best_other;
}

inline double margin_nl(const MlpModel& f, const LabeledSample& s) {
    return margin_nl(f, s.input(), label_to_class(s.label));
}

// Classifier view used by Blind Walk: argmax logit mapped back to {-1,+1}.
inline int predict_label(const MlpModel& f, std::span<const double> x) {
    const auto logits = forward(f, x);
    if (logits.size() < 2) throw ShapeError("predict_label: need a 2-logit classifier");
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j)
        if (logits[j] > logits[best]) best = j;
    return best == 1 ? 1 : -1;
}

struct PgdConfig {
    double gamma = 10.0 / 255.0;  // l-inf budget
    double step_size = 10.0 / 255.0 / 4.0;
    std::size_t n_steps = 10;

    void validate() const {
        if (!(gamma > 0.0)) throw ConfigError("PgdConfig: gamma > 0 required");
        if (!(step_size > 0.0 && step_size <= gamma))
            throw ConfigError("PgdConfig: 0 < step_size <= gamma required");
        if (n_steps < 1) throw ConfigError("PgdConfig: n_steps >= 1 required");
    }

    static PgdConfig with_gamma(double gamma) {
        PgdConfig cfg;
        cfg.gamma = gamma;
        cfg.step_size = gamma / 4.0;
        return cfg;
    }
};

// l-inf PGD ascent on the cross-entropy loss; the iterate is re-projected
// into the gamma ball after every step.
inline std::vector<double> pgd_attack(const MlpModel& f, std::span<const double> x,
                                      std::size_t y_class, const PgdConfig& cfg) {
    cfg.validate();
    std::vector<double> adv(x.begin(), x.end());
    nn::ForwardCache cache;
    nn::GradBuffer grads;
    grads.reset(f);
    std::vector<double> dlogits;
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
        const auto& logits = nn::forward_cached(f, adv, cache);
        nn::ce_loss_grad(logits, y_class, dlogits);
        const auto dx = nn::backward(f, cache, dlogits, grads);
        for (std::size_t i = 0; i < adv.size(); ++i) {
            const double g = dx[i];
            if (g > 0.0) adv[i] += cfg.step_size;
            else if (g < 0.0) adv[i] -= cfg.step_size;
            adv[i] = std::clamp(adv[i], x[i] - cfg.gamma, x[i] + cfg.gamma);
        }
    }
    return adv;
}

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    std::optional<PgdConfig> adversarial;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size >= 1 required");
        if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate > 0 required");
        if (adversarial) adversarial->validate();
    }
};

struct TrainResult {
    MlpModel model;
    std::vector<double> epoch_loss;
};

// SGD on softmax cross-entropy over {-1,+1} labels. With cfg.adversarial set,
// every batch sample is replaced by its PGD perturbation before the gradient
// step. Deterministic in cfg.seed.
inline TrainResult train(MlpModel f, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    f.validate();
    if (data.samples.empty()) throw SpecError("train: empty dataset");
    if (f.input_dim() != data.spec.input_dim())
        throw ShapeError("train: model input dim does not match dataset");

    const std::size_t n = data.size();
    Rng rng(derive_seed(cfg.seed, 0x7a41));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    nn::ForwardCache cache;
    nn::GradBuffer grads;
    std::vector<double> dlogits;
    TrainResult out;
    out.epoch_loss.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            grads.reset(f);
            double batch_loss = 0.0;
            for (std::size_t bi = start; bi < end; ++bi) {
                const LabeledSample& s = data.samples[order[bi]];
                const std::size_t y_class = label_to_class(s.label);
                std::vector<double> x = s.input();
                if (cfg.adversarial) x = pgd_attack(f, x, y_class, *cfg.adversarial);
                const auto& logits = nn::forward_cached(f, x, cache);
                batch_loss += nn::ce_loss_grad(logits, y_class, dlogits);
                nn::backward(f, cache, dlogits, grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t li = 0; li < f.depth(); ++li) {
                auto& w = f.layers[li].weights.data();
                const auto& gw = grads.weights[li].data();
                for (std::size_t i = 0; i < w.size(); ++i)
                    w[i] -= cfg.learning_rate * inv * gw[i];
                for (std::size_t i = 0; i < f.layers[li].bias.size(); ++i)
                    f.layers[li].bias[i] -= cfg.learning_rate * inv * grads.bias[li][i];
            }
            epoch_loss += batch_loss;
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw TrainingError("train: non-finite loss", static_cast<int>(epoch));
        out.epoch_loss.push_back(epoch_loss);
    }
    out.model = std::move(f);
    return out;
}

// SGD with squared loss on a scalar head; used for the margin regressor.
// Optional inverted dropout on hidden activations, applied during training
// only.
inline TrainResult train_regressor(MlpModel f, const std::vector<std::vector<double>>& inputs,
                                   const std::vector<double>& targets, const TrainConfig& cfg,
                                   double dropout_rate = 0.0) {
    cfg.validate();
    f.validate();
    if (inputs.empty() || inputs.size() != targets.size())
        throw SpecError("train_regressor: inputs/targets mismatch");
    if (f.output_dim() != 1) throw ShapeError("train_regressor: scalar head required");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("train_regressor: dropout_rate in [0, 1) required");

    const std::size_t n = inputs.size();
    Rng rng(derive_seed(cfg.seed, 0x7a42));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    nn::ForwardCache cache;
    nn::GradBuffer grads;
    std::vector<std::vector<double>> masks;
    TrainResult out;
    out.epoch_loss.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            grads.reset(f);
            double batch_loss = 0.0;
            for (std::size_t bi = start; bi < end; ++bi) {
                const auto& x = inputs[order[bi]];
                const bool dropped = dropout_rate > 0.0;
                if (dropped) nn::forward_dropout(f, x, dropout_rate, rng, cache, masks);
                else nn::forward_cached(f, x, cache);
                const double err = cache.post.back()[0] - targets[order[bi]];
                batch_loss += err * err;
                nn::backward(f, cache, {2.0 * err}, grads, dropped ? &masks : nullptr);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t li = 0; li < f.depth(); ++li) {
                auto& w = f.layers[li].weights.data();
                const auto& gw = grads.weights[li].data();
                for (std::size_t i = 0; i < w.size(); ++i)
                    w[i] -= cfg.learning_rate * inv * gw[i];
                for (std::size_t i = 0; i < f.layers[li].bias.size(); ++i)
                    f.layers[li].bias[i] -= cfg.learning_rate * inv * grads.bias[li][i];
            }
            epoch_loss += batch_loss;
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw TrainingError("train_regressor: non-finite loss", static_cast<int>(epoch));
        out.epoch_loss.push_back(epoch_loss);
    }
    out.model = std::move(f);
    return out;
}

// Fraction of dataset samples the classifier labels correctly.
inline double accuracy(const MlpModel& f, const Dataset& d) {
    if (d.samples.empty()) throw SpecError("accuracy: empty dataset");
    std::size_t correct = 0;
    for (const LabeledSample& s : d.samples)
        if (predict_label(f, s.input()) == s.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(d.size());
}

// Largest singular value by power iteration on W^T W. A zero matrix returns 0.
inline double spectral_norm(const Matrix& w, std::size_t iters = 200) {
    if (iters < 1) throw ConfigError("spectral_norm: iters >= 1 required");
    if (w.rows() == 0 || w.cols() == 0) return 0.0;
    std::vector<double> v(w.cols());
    // Deterministic, generically non-orthogonal start direction.
    Rng rng(0x5bec7123);
    for (double& vi : v) vi = rng.uniform() + 0.5;
    double nv = norm2(v);
    for (double& vi : v) vi /= nv;

    double sigma = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        auto wv = w.matvec(v);
        const double nwv = norm2(wv);
        if (nwv == 0.0) return 0.0;
        v = w.matvec_t(wv);
        nv = norm2(v);
        if (nv == 0.0) return 0.0;
        for (double& vi : v) vi /= nv;
        const double next = nv / nwv;  // ||W^T W v|| / ||W v|| -> sigma_max
        if (it > 0 && std::abs(next - sigma) <= 1e-13 * std::max(1.0, next)) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

// --- file format ------------------------------------------------------------
//
// mlp v1
// layers <d>
// layer_<i>: <rows> <cols>; <rows*cols weights> <rows biases>; <activation>

inline std::string mlp_to_text(const MlpModel& f) {
    std::string out = "mlp v1\n";
    out += "layers " + std::to_string(f.depth()) + "\n";
    for (std::size_t i = 0; i < f.depth(); ++i) {
        const Layer& l = f.layers[i];
        out += "layer_" + std::to_string(i) + ": " + std::to_string(l.weights.rows()) + " " +
               std::to_string(l.weights.cols()) + ";";
        for (double v : l.weights.data()) { out.push_back(' '); out += fmt_double(v); }
        for (double v : l.bias) { out.push_back(' '); out += fmt_double(v); }
        out += "; ";
        out += to_string(l.activation);
        out.push_back('\n');
    }
    return out;
}

inline void save_mlp(const MlpModel& f, const std::string& path) {
    write_file(path, mlp_to_text(f));
}

inline MlpModel mlp_from_text(const std::string& text) {
    const auto lines = split(text, '\n');
    if (lines.size() < 2 || trim(lines[0]) != "mlp v1")
        throw FormatError("mlp file: missing 'mlp v1' header");
    const auto header = split(std::string(trim(lines[1])), ' ');
    if (header.size() != 2 || header[0] != "layers")
        throw FormatError("mlp file: missing layer count");
    const std::size_t depth = static_cast<std::size_t>(parse_int(header[1]));

    MlpModel f;
    for (std::size_t i = 0; i < depth; ++i) {
        const auto line = trim(lines[2 + i]);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) throw FormatError("mlp file: bad layer line");
        const auto parts = split(line.substr(colon + 1), ';');
        if (parts.size() != 3) throw FormatError("mlp file: layer needs 3 segments");

        const auto dims = split(std::string(trim(parts[0])), ' ');
        if (dims.size() != 2) throw FormatError("mlp file: bad layer dims");
        const std::size_t rows = static_cast<std::size_t>(parse_int(dims[0]));
        const std::size_t cols = static_cast<std::size_t>(parse_int(dims[1]));

        std::vector<double> values;
        for (const auto& tok : split(std::string(trim(parts[1])), ' '))
            if (!trim(tok).empty()) values.push_back(parse_double(tok));
        if (values.size() != rows * cols + rows)
            throw FormatError("mlp file: layer value count mismatch");

        Layer l;
        l.weights = Matrix(rows, cols);
        std::copy(values.begin(), values.begin() + static_cast<long>(rows * cols),
                  l.weights.data().begin());
        l.bias.assign(values.begin() + static_cast<long>(rows * cols), values.end());
        l.activation = activation_from_string(trim(parts[2]));
        f.layers.push_back(std::move(l));
    }
    f.validate();
    return f;
}

inline MlpModel load_mlp(const std::string& path) { return mlp_from_text(read_file(path)); }

}  // namespace dilab
