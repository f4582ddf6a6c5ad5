#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "endprompt/rng.hpp"
#include "endprompt/rope.hpp"

namespace eplab {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct ModelConfig {
    int vocab_size = 0;
    int model_dim = 0;
    int num_heads = 0;
    int num_layers = 0;
    int mlp_ratio = 4;
    double rotary_base = 10000.0;
    int max_eval_positions = 4096;  // informational
    bool tied_head = true;

    int head_dim() const { return model_dim / num_heads; }

    void validate() const {
        if (vocab_size < 1 || model_dim < 1 || num_heads < 1 || num_layers < 1 || mlp_ratio < 1) {
            throw std::invalid_argument("ModelConfig: all counts must be >= 1");
        }
        if (model_dim % num_heads != 0) {
            throw std::invalid_argument("ModelConfig: model_dim not divisible by num_heads");
        }
        if (head_dim() % 2 != 0) {
            throw std::invalid_argument("ModelConfig: head_dim must be even for rotary attention");
        }
        if (!(rotary_base > 1.0)) {
            throw std::invalid_argument("ModelConfig: rotary_base must be > 1");
        }
    }

    bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::size_t offset = 0;

    std::size_t count() const { return static_cast<std::size_t>(rows * cols); }
};

// All learnable tensors, stored in one flat buffer with a named layout so the
// optimizer, the checkpoint writer and the finite-difference checker can walk
// parameters uniformly. Matrix views are row-major maps into the buffer.
class TinyModelParams {
public:
    TinyModelParams() = default;

    explicit TinyModelParams(const ModelConfig& config) : config_(config) {
        config.validate();
        const Eigen::Index d = config.model_dim;
        const Eigen::Index hidden = static_cast<Eigen::Index>(config.mlp_ratio) * d;
        add_tensor("embedding", config.vocab_size, d);
        for (int l = 0; l < config.num_layers; ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            add_tensor(p + "attn_norm.gain", 1, d);
            add_tensor(p + "attn.wq", d, d);
            add_tensor(p + "attn.wk", d, d);
            add_tensor(p + "attn.wv", d, d);
            add_tensor(p + "attn.wo", d, d);
            add_tensor(p + "mlp_norm.gain", 1, d);
            add_tensor(p + "mlp.w_up", d, hidden);
            add_tensor(p + "mlp.w_down", hidden, d);
        }
        add_tensor("final_norm.gain", 1, d);
        if (!config.tied_head) {
            add_tensor("head", config.vocab_size, d);
        }
        flat_.assign(total_, 0.0);
        for (const TensorSpec& spec : specs_) {
            if (spec.name.find("norm.gain") != std::string::npos) {
                view(spec).setOnes();
            }
        }
    }

    static TinyModelParams random_init(const ModelConfig& config, Rng& rng,
                                       double init_std = 0.08) {
        TinyModelParams params(config);
        for (const TensorSpec& spec : params.specs_) {
            if (spec.name.find("norm.gain") != std::string::npos) {
                continue;  // gains stay at 1
            }
            auto m = params.view(spec);
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    m(r, c) = rng.normal(0.0, init_std);
                }
            }
        }
        return params;
    }

    const ModelConfig& config() const { return config_; }
    const std::vector<TensorSpec>& tensors() const { return specs_; }
    std::size_t size() const { return flat_.size(); }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    Eigen::Map<Mat> view(const TensorSpec& spec) {
        return {flat_.data() + spec.offset, spec.rows, spec.cols};
    }
    Eigen::Map<const Mat> view(const TensorSpec& spec) const {
        return {flat_.data() + spec.offset, spec.rows, spec.cols};
    }

    const TensorSpec& tensor(const std::string& name) const {
        for (const TensorSpec& spec : specs_) {
            if (spec.name == name) {
                return spec;
            }
        }
        throw std::invalid_argument("TinyModelParams: no tensor named " + name);
    }

    Eigen::Map<const Mat> view(const std::string& name) const { return view(tensor(name)); }

private:
    void add_tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        specs_.push_back({name, rows, cols, total_});
        total_ += static_cast<std::size_t>(rows * cols);
    }

    ModelConfig config_;
    std::vector<TensorSpec> specs_;
    std::size_t total_ = 0;
    std::vector<double> flat_;
};

// One training batch. Assigned positions are stored integer-exact together
// with the interpolation scale; the model divides just before rotation.
struct Batch {
    std::vector<std::vector<int>> tokens;                 // B x T
    std::vector<std::vector<std::int64_t>> assigned;      // B x T
    double scale = 1.0;
    std::vector<std::vector<double>> weights;             // B x (T-1)

    std::size_t batch_size() const { return tokens.size(); }

    std::vector<double> eff_positions(std::size_t row) const {
        std::vector<double> out(assigned[row].size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<double>(assigned[row][i]) / scale;
        }
        return out;
    }

    void validate(int vocab_size) const {
        if (tokens.size() != assigned.size() || tokens.size() != weights.size()) {
            throw std::invalid_argument("Batch: row count mismatch");
        }
        for (std::size_t b = 0; b < tokens.size(); ++b) {
            const std::size_t t = tokens[b].size();
            if (t == 0 || assigned[b].size() != t || weights[b].size() != t - 1) {
                throw std::invalid_argument("Batch: shape mismatch in row " + std::to_string(b));
            }
            for (int id : tokens[b]) {
                if (id < 0 || id >= vocab_size) {
                    throw std::invalid_argument("Batch: token id out of range");
                }
            }
            for (std::size_t i = 1; i < t; ++i) {
                if (!(assigned[b][i] > assigned[b][i - 1])) {
                    throw std::invalid_argument("Batch: positions not strictly increasing");
                }
            }
            for (double w : weights[b]) {
                if (!(w >= 0.0)) {
                    throw std::invalid_argument("Batch: negative loss weight");
                }
            }
        }
    }
};

namespace detail {

struct NormCache {
    Mat normalized;       // x / rms, per row
    Vec inv_rms;          // 1 / rms, per row
};

struct LayerCache {
    Mat x_in;             // residual stream entering the block
    NormCache attn_norm;
    Mat a;                // normed input to attention projections
    Mat q_rot, k_rot, v;  // rotated queries/keys and values
    std::vector<Mat> probs;  // per-head attention rows (post softmax)
    Mat mix;              // concatenated head outputs
    Mat x_mid;            // residual after attention
    NormCache mlp_norm;
    Mat b;                // normed input to the MLP
    Mat u;                // pre-activation hidden
    Mat h;                // silu(u)
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Mat x0;               // embedded tokens
    Mat x_final;
    NormCache final_norm;
    Mat f;                // final normed stream
    std::vector<double> cos_table, sin_table;  // T x (head_dim/2)
};

inline constexpr double kRmsEps = 1e-5;

inline void rmsnorm_forward(const Mat& x, Eigen::Map<const Mat> gain, NormCache* cache,
                            Mat* out) {
    const Eigen::Index t = x.rows();
    const Eigen::Index d = x.cols();
    cache->normalized.resize(t, d);
    cache->inv_rms.resize(t);
    out->resize(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
        const double ms = x.row(i).squaredNorm() / static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(ms + kRmsEps);
        cache->inv_rms(i) = inv;
        cache->normalized.row(i) = x.row(i) * inv;
        out->row(i) = cache->normalized.row(i).cwiseProduct(gain.row(0));
    }
}

// dx and dgain accumulate; dy is consumed.
inline void rmsnorm_backward(const NormCache& cache, Eigen::Map<const Mat> gain, const Mat& dy,
                             Mat* dx, Eigen::Map<Mat> dgain) {
    const Eigen::Index t = dy.rows();
    const Eigen::Index d = dy.cols();
    for (Eigen::Index i = 0; i < t; ++i) {
        dgain.row(0) += dy.row(i).cwiseProduct(cache.normalized.row(i));
        const auto dn = dy.row(i).cwiseProduct(gain.row(0));
        const double proj = dn.cwiseProduct(cache.normalized.row(i)).sum() / static_cast<double>(d);
        dx->row(i) += (dn - cache.normalized.row(i) * proj) * cache.inv_rms(i);
    }
}

inline void build_rotation_tables(const ModelConfig& config, std::span<const double> positions,
                                  std::vector<double>* cos_table, std::vector<double>* sin_table) {
    const int half = config.head_dim() / 2;
    const std::size_t t = positions.size();
    std::vector<double> freqs(static_cast<std::size_t>(half));
    for (int j = 0; j < half; ++j) {
        freqs[static_cast<std::size_t>(j)] = std::pow(
            config.rotary_base, -2.0 * static_cast<double>(j) / static_cast<double>(config.head_dim()));
    }
    cos_table->resize(t * static_cast<std::size_t>(half));
    sin_table->resize(t * static_cast<std::size_t>(half));
    for (std::size_t i = 0; i < t; ++i) {
        for (int j = 0; j < half; ++j) {
            const double angle = positions[i] * freqs[static_cast<std::size_t>(j)];
            (*cos_table)[i * static_cast<std::size_t>(half) + static_cast<std::size_t>(j)] =
                std::cos(angle);
            (*sin_table)[i * static_cast<std::size_t>(half) + static_cast<std::size_t>(j)] =
                std::sin(angle);
        }
    }
}

// Rotates every head slice of m in place; sign = -1 applies the inverse
// rotation (used by the backward pass, rotation being orthogonal).
inline void apply_rotation(Mat& m, const ModelConfig& config, const std::vector<double>& cos_table,
                           const std::vector<double>& sin_table, double sign) {
    const int half = config.head_dim() / 2;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (int head = 0; head < config.num_heads; ++head) {
            const Eigen::Index base = static_cast<Eigen::Index>(head) * config.head_dim();
            for (int j = 0; j < half; ++j) {
                const std::size_t idx =
                    static_cast<std::size_t>(i) * static_cast<std::size_t>(half) +
                    static_cast<std::size_t>(j);
                const double c = cos_table[idx];
                const double s = sign * sin_table[idx];
                const double x = m(i, base + 2 * j);
                const double y = m(i, base + 2 * j + 1);
                m(i, base + 2 * j) = x * c - y * s;
                m(i, base + 2 * j + 1) = x * s + y * c;
            }
        }
    }
}

}  // namespace detail

// Forward pass for one sequence: pre-norm decoder stack with rotary attention
// over the supplied effective positions, 1/sqrt(head_dim) score scaling and a
// causal mask. Returns logits [T x vocab].
inline Mat forward_cached(const TinyModelParams& params, std::span<const int> tokens,
                          std::span<const double> eff_positions, detail::ForwardCache* cache) {
    const ModelConfig& config = params.config();
    const Eigen::Index t = static_cast<Eigen::Index>(tokens.size());
    if (t == 0) {
        throw std::invalid_argument("forward: empty token sequence");
    }
    if (eff_positions.size() != tokens.size()) {
        throw std::invalid_argument("forward: positions/tokens length mismatch");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] < 0 || tokens[i] >= config.vocab_size) {
            throw std::invalid_argument("forward: token id out of range at index " +
                                        std::to_string(i));
        }
        if (i > 0 && !(eff_positions[i] > eff_positions[i - 1])) {
            throw std::invalid_argument("forward: positions not strictly increasing at index " +
                                        std::to_string(i));
        }
    }

    const Eigen::Index d = config.model_dim;
    const Eigen::Index dh = config.head_dim();
    const double tau = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto emb = params.view("embedding");

    cache->layers.resize(static_cast<std::size_t>(config.num_layers));
    detail::build_rotation_tables(config, eff_positions, &cache->cos_table, &cache->sin_table);

    cache->x0.resize(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
        cache->x0.row(i) = emb.row(tokens[static_cast<std::size_t>(i)]);
    }

    Mat x = cache->x0;
    for (int l = 0; l < config.num_layers; ++l) {
        detail::LayerCache& lc = cache->layers[static_cast<std::size_t>(l)];
        const std::string p = "layer" + std::to_string(l) + ".";
        lc.x_in = x;

        detail::rmsnorm_forward(x, params.view(p + "attn_norm.gain"), &lc.attn_norm, &lc.a);
        lc.q_rot.noalias() = lc.a * params.view(p + "attn.wq");
        lc.k_rot.noalias() = lc.a * params.view(p + "attn.wk");
        lc.v.noalias() = lc.a * params.view(p + "attn.wv");
        detail::apply_rotation(lc.q_rot, config, cache->cos_table, cache->sin_table, 1.0);
        detail::apply_rotation(lc.k_rot, config, cache->cos_table, cache->sin_table, 1.0);

        lc.mix.resize(t, d);
        lc.probs.resize(static_cast<std::size_t>(config.num_heads));
        for (int head = 0; head < config.num_heads; ++head) {
            const Eigen::Index base = static_cast<Eigen::Index>(head) * dh;
            Mat& probs = lc.probs[static_cast<std::size_t>(head)];
            probs.resize(t, t);
            probs.noalias() =
                lc.q_rot.middleCols(base, dh) * lc.k_rot.middleCols(base, dh).transpose() * tau;
            for (Eigen::Index i = 0; i < t; ++i) {
                auto row = probs.row(i).head(i + 1);
                const double m = row.maxCoeff();
                row = (row.array() - m).exp();
                row /= row.sum();
                if (i + 1 < t) {
                    probs.row(i).tail(t - i - 1).setZero();
                }
            }
            lc.mix.middleCols(base, dh).noalias() = probs * lc.v.middleCols(base, dh);
        }
        x.noalias() += lc.mix * params.view(p + "attn.wo");
        lc.x_mid = x;

        detail::rmsnorm_forward(x, params.view(p + "mlp_norm.gain"), &lc.mlp_norm, &lc.b);
        lc.u.noalias() = lc.b * params.view(p + "mlp.w_up");
        lc.h = lc.u.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
        x.noalias() += lc.h * params.view(p + "mlp.w_down");
    }

    cache->x_final = x;
    detail::rmsnorm_forward(x, params.view("final_norm.gain"), &cache->final_norm, &cache->f);

    Mat logits;
    if (config.tied_head) {
        logits.noalias() = cache->f * emb.transpose();
    } else {
        logits.noalias() = cache->f * params.view("head").transpose();
    }
    return logits;
}

inline Mat forward(const TinyModelParams& params, std::span<const int> tokens,
                   std::span<const double> eff_positions) {
    detail::ForwardCache cache;
    return forward_cached(params, tokens, eff_positions, &cache);
}

struct LossResult {
    double sum = 0.0;
    double mean = 0.0;  // NaN when all weights are zero
    bool all_weights_zero = false;
};

// Weighted next-token negative log-likelihood. logits row l scores the
// prediction of targets[l] with weight weights[l]; rows beyond the target
// range are ignored. The normalized variant mean = sum / sum(w) is reported
// for metrics only and is NaN (serialized "NA") when every weight is zero.
inline LossResult weighted_nll(const Mat& logits, std::span<const int> targets,
                               std::span<const double> weights) {
    if (targets.size() != weights.size()) {
        throw std::invalid_argument("weighted_nll: targets/weights length mismatch");
    }
    if (static_cast<std::size_t>(logits.rows()) < targets.size()) {
        throw std::invalid_argument("weighted_nll: not enough logit rows");
    }
    double loss = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double w = weights[i];
        if (!(w >= 0.0)) {
            throw std::invalid_argument("weighted_nll: negative weight");
        }
        if (w == 0.0) {
            continue;
        }
        const auto row = logits.row(static_cast<Eigen::Index>(i));
        const int target = targets[i];
        if (target < 0 || target >= logits.cols()) {
            throw std::invalid_argument("weighted_nll: target id out of range");
        }
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).exp().sum());
        loss += w * (lse - row(target));
        weight_sum += w;
    }
    LossResult out;
    out.sum = loss;
    out.all_weights_zero = weight_sum == 0.0;
    out.mean = out.all_weights_zero ? std::numeric_limits<double>::quiet_NaN() : loss / weight_sum;
    return out;
}

namespace detail {

inline void check_finite(const Mat& m, int layer, const char* where) {
    if (!m.allFinite()) {
        throw std::runtime_error(std::string("numeric overflow in layer ") +
                                 std::to_string(layer) + " (" + where + ")");
    }
}

// Reverse-mode gradients for one sequence, accumulated into grad (a buffer
// aligned with params.flat()). Returns the weighted loss terms.
inline LossResult backward_sample(const TinyModelParams& params, std::span<const int> tokens,
                                  std::span<const double> eff_positions,
                                  std::span<const double> weights, std::span<double> grad) {
    const ModelConfig& config = params.config();
    ForwardCache cache;
    const Mat logits = forward_cached(params, tokens, eff_positions, &cache);

    const Eigen::Index t = logits.rows();
    if (weights.size() != tokens.size() - 1) {
        throw std::invalid_argument("backward: weights must have length T-1");
    }

    std::vector<int> targets(tokens.begin() + 1, tokens.end());
    const LossResult loss = weighted_nll(logits, targets, weights);

    auto grad_view = [&](const std::string& name) {
        const TensorSpec& spec = params.tensor(name);
        return Eigen::Map<Mat>(grad.data() + spec.offset, spec.rows, spec.cols);
    };

    // d logits
    Mat dlogits = Mat::Zero(t, config.vocab_size);
    for (Eigen::Index i = 0; i + 1 < t; ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        if (w == 0.0) {
            continue;
        }
        const auto row = logits.row(i);
        const double m = row.maxCoeff();
        Eigen::RowVectorXd p = (row.array() - m).exp();
        p /= p.sum();
        dlogits.row(i) = w * p;
        dlogits(i, targets[static_cast<std::size_t>(i)]) -= w;
    }

    const auto emb = params.view("embedding");
    Mat df;
    if (config.tied_head) {
        df.noalias() = dlogits * emb;
        grad_view("embedding").noalias() += dlogits.transpose() * cache.f;
    } else {
        df.noalias() = dlogits * params.view("head");
        grad_view("head").noalias() += dlogits.transpose() * cache.f;
    }

    Mat dx = Mat::Zero(t, config.model_dim);
    rmsnorm_backward(cache.final_norm, params.view("final_norm.gain"), df, &dx,
                     grad_view("final_norm.gain"));

    const Eigen::Index dh = config.head_dim();
    const double tau = 1.0 / std::sqrt(static_cast<double>(dh));

    for (int l = config.num_layers - 1; l >= 0; --l) {
        const LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
        const std::string p = "layer" + std::to_string(l) + ".";
        check_finite(dx, l, "residual gradient");

        // MLP block: x_out = x_mid + silu(b W_up) W_down
        Mat dh_act;
        dh_act.noalias() = dx * params.view(p + "mlp.w_down").transpose();
        grad_view(p + "mlp.w_down").noalias() += lc.h.transpose() * dx;
        Mat du = dh_act.cwiseProduct(lc.u.unaryExpr([](double v) {
            const double sig = 1.0 / (1.0 + std::exp(-v));
            return sig * (1.0 + v * (1.0 - sig));
        }));
        Mat db;
        db.noalias() = du * params.view(p + "mlp.w_up").transpose();
        grad_view(p + "mlp.w_up").noalias() += lc.b.transpose() * du;
        // dx currently holds d(x_out); the residual passes it through to x_mid.
        rmsnorm_backward(lc.mlp_norm, params.view(p + "mlp_norm.gain"), db, &dx,
                         grad_view(p + "mlp_norm.gain"));

        // Attention block: x_mid = x_in + mix Wo
        Mat dmix;
        dmix.noalias() = dx * params.view(p + "attn.wo").transpose();
        grad_view(p + "attn.wo").noalias() += lc.mix.transpose() * dx;

        Mat dq_rot = Mat::Zero(t, config.model_dim);
        Mat dk_rot = Mat::Zero(t, config.model_dim);
        Mat dv = Mat::Zero(t, config.model_dim);
        for (int head = 0; head < config.num_heads; ++head) {
            const Eigen::Index base = static_cast<Eigen::Index>(head) * dh;
            const Mat& probs = lc.probs[static_cast<std::size_t>(head)];
            Mat dprobs;
            dprobs.noalias() = dmix.middleCols(base, dh) * lc.v.middleCols(base, dh).transpose();
            dv.middleCols(base, dh).noalias() = probs.transpose() * dmix.middleCols(base, dh);
            // softmax backward, row by row over the causal prefix
            Mat dscores = Mat::Zero(t, t);
            for (Eigen::Index i = 0; i < t; ++i) {
                const auto prow = probs.row(i).head(i + 1);
                const auto dprow = dprobs.row(i).head(i + 1);
                const double inner = prow.cwiseProduct(dprow).sum();
                dscores.row(i).head(i + 1) =
                    prow.cwiseProduct((dprow.array() - inner).matrix());
            }
            dq_rot.middleCols(base, dh).noalias() = dscores * lc.k_rot.middleCols(base, dh) * tau;
            dk_rot.middleCols(base, dh).noalias() =
                dscores.transpose() * lc.q_rot.middleCols(base, dh) * tau;
        }
        apply_rotation(dq_rot, config, cache.cos_table, cache.sin_table, -1.0);
        apply_rotation(dk_rot, config, cache.cos_table, cache.sin_table, -1.0);

        Mat da = Mat::Zero(t, config.model_dim);
        da.noalias() += dq_rot * params.view(p + "attn.wq").transpose();
        grad_view(p + "attn.wq").noalias() += lc.a.transpose() * dq_rot;
        da.noalias() += dk_rot * params.view(p + "attn.wk").transpose();
        grad_view(p + "attn.wk").noalias() += lc.a.transpose() * dk_rot;
        da.noalias() += dv * params.view(p + "attn.wv").transpose();
        grad_view(p + "attn.wv").noalias() += lc.a.transpose() * dv;

        rmsnorm_backward(lc.attn_norm, params.view(p + "attn_norm.gain"), da, &dx,
                         grad_view(p + "attn_norm.gain"));
        check_finite(dx, l, "input gradient");
    }

    // Embedding gather backward
    auto demb = grad_view("embedding");
    for (Eigen::Index i = 0; i < t; ++i) {
        demb.row(tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    }
    return loss;
}

}  // namespace detail

// Exact gradients of the weighted objective over a batch. Per-sample
// gradients are computed independently and summed in sample order, so the
// result is bit-identical for any thread count.
inline LossResult backward(const TinyModelParams& params, const Batch& batch,
                           std::vector<double>& grad, int threads = 1) {
    batch.validate(params.config().vocab_size);
    grad.assign(params.size(), 0.0);
    const std::size_t n = batch.batch_size();

    std::vector<std::vector<double>> sample_grads(n);
    std::vector<LossResult> sample_losses(n);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            sample_grads[i].assign(params.size(), 0.0);
            const std::vector<double> positions = batch.eff_positions(i);
            sample_losses[i] =
                detail::backward_sample(params, batch.tokens[i], positions, batch.weights[i],
                                        sample_grads[i]);
        }
    };

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) /
                                  static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) {
                pool.emplace_back(run_range, begin, end);
            }
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }

    double loss_sum = 0.0;
    double weight_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < grad.size(); ++j) {
            grad[j] += sample_grads[i][j];
        }
        loss_sum += sample_losses[i].sum;
        if (!sample_losses[i].all_weights_zero) {
            double w = 0.0;
            for (double wv : batch.weights[i]) {
                w += wv;
            }
            weight_total += w;
        }
    }
    LossResult out;
    out.sum = loss_sum;
    out.all_weights_zero = weight_total == 0.0;
    out.mean =
        out.all_weights_zero ? std::numeric_limits<double>::quiet_NaN() : loss_sum / weight_total;
    return out;
}

// Contiguous interpolated index stream for decoding: assigned indices
// next, next+1, ... are divided by scale. limit is one past the last
// admissible assigned index.
struct PositionStream {
    std::int64_t next = 0;
    std::int64_t limit = 0;
    double scale = 1.0;

    double take() {
        if (next >= limit) {
            throw std::runtime_error("PositionStream: position stream exhausted");
        }
        return static_cast<double>(next++) / scale;
    }
};

// Appends argmax continuations one token at a time; ties resolve to the
// lowest token id. Deterministic given params and inputs.
inline std::vector<int> greedy_decode(const TinyModelParams& params, std::vector<int> prompt,
                                      PositionStream& stream, int n_new) {
    if (prompt.empty()) {
        throw std::invalid_argument("greedy_decode: empty prompt");
    }
    std::vector<double> positions;
    positions.reserve(prompt.size() + static_cast<std::size_t>(n_new));
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        positions.push_back(stream.take());
    }
    for (int step = 0; step < n_new; ++step) {
        const Mat logits = forward(params, prompt, positions);
        const auto row = logits.row(logits.rows() - 1);
        Eigen::Index best = 0;
        row.maxCoeff(&best);
        prompt.push_back(static_cast<int>(best));
        positions.push_back(stream.take());
    }
    return prompt;
}

}  // namespace eplab
