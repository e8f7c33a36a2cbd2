#include "pqm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pqm/checkpoint.hpp"
#include "pqm/error.hpp"

namespace pqm {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::embedding: return "embedding";
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::linear: return "linear";
    }
    throw Error::validation("unknown layer kind");
}

LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "embedding") return LayerKind::embedding;
    if (s == "conv1d") return LayerKind::conv1d;
    if (s == "linear") return LayerKind::linear;
    throw Error::corrupt("unknown layer kind: " + s);
}

const Matrix& Layer::base_weight(const NormalFloatCodebook& cb) const {
    if (!quantised) return weight;
    if (!deq_cache) deq_cache = dequantise(qweight, cb);
    return *deq_cache;
}

Layer& ToyModel::layer(const std::string& id) {
    for (auto& l : layers)
        if (l.id == id) return l;
    throw Error::validation("no such layer: " + id);
}

const Layer& ToyModel::layer(const std::string& id) const {
    for (const auto& l : layers)
        if (l.id == id) return l;
    throw Error::validation("no such layer: " + id);
}

bool ToyModel::any_quantised() const {
    for (const auto& l : layers)
        if (l.quantised) return true;
    return false;
}

uint64_t ToyModel::total_params() const {
    uint64_t n = 0;
    for (const auto& l : layers) {
        n += static_cast<uint64_t>(l.out_dim()) * l.in_dim();
        n += l.bias.size();
    }
    return n;
}

uint64_t ToyModel::linear_params() const {
    uint64_t n = 0;
    for (const auto& l : layers) {
        if (l.kind != LayerKind::linear) continue;
        n += static_cast<uint64_t>(l.out_dim()) * l.in_dim();
        n += l.bias.size();
    }
    return n;
}

bool QuantSelection::covers(LayerKind k) const {
    switch (k) {
        case LayerKind::embedding: return embed;
        case LayerKind::conv1d: return conv;
        case LayerKind::linear: return linear;
    }
    return false;
}

ToyModel build_model(int d_model, uint64_t seed) {
    if (d_model < 8) throw Error::validation("build_model: d_model must be >= 8");
    ToyModel m;
    m.vocab = kVocab;
    m.classes = kClasses;
    m.d_model = d_model;
    m.seed = seed;
    Rng root(seed);
    const float fc_std = 1.0f / std::sqrt(static_cast<float>(d_model));

    auto make = [&](const std::string& id, LayerKind kind, int rows, int cols,
                    float std, bool bias, bool lora, uint64_t stream) {
        Layer l;
        l.id = id;
        l.kind = kind;
        l.lora_attached = lora;
        l.weight = Matrix(rows, cols);
        Rng r = root.fork(stream);
        gaussian_fill(l.weight, 0.0f, std, r);
        if (bias) l.bias.assign(rows, 0.0f);
        return l;
    };

    m.layers.push_back(make("embed", LayerKind::embedding, kVocab, d_model, 0.5f,
                            false, false, 1));
    m.layers.push_back(make("conv", LayerKind::conv1d, d_model, 3,
                            1.0f / std::sqrt(3.0f), true, false, 2));
    m.layers.push_back(make("fc1", LayerKind::linear, d_model, d_model, fc_std,
                            true, true, 3));
    m.layers.push_back(make("fc2", LayerKind::linear, d_model, d_model, fc_std,
                            true, true, 4));
    m.layers.push_back(make("head", LayerKind::linear, kClasses, d_model, fc_std,
                            true, false, 5));
    return m;
}

ToyModel quantise_model(const ToyModel& model, const QuantSelection& sel, int block_size,
                        const NormalFloatCodebook& cb, QuantStats* stats) {
    if (model.any_quantised())
        throw Error::validation("quantise_model: model already quantised");
    ToyModel out = model;
    for (auto& l : out.layers) {
        if (!sel.covers(l.kind)) continue;
        l.qweight = quantise_matrix(l.weight, block_size, cb);
        l.quantised = true;
        l.weight = Matrix{};
        l.invalidate_cache();
    }
    if (stats) {
        QuantStats s;
        s.raw_bytes = model_file_bytes(model);
        s.quantised_bytes = model_file_bytes(out);
        s.ratio = static_cast<double>(s.raw_bytes) / static_cast<double>(s.quantised_bytes);
        *stats = s;
    }
    return out;
}

ToyModel dequantise_model(const ToyModel& model, const NormalFloatCodebook& cb) {
    ToyModel out = model;
    for (auto& l : out.layers) {
        if (!l.quantised) continue;
        l.weight = dequantise(l.qweight, cb);
        l.qweight = QuantisedMatrix{};
        l.quantised = false;
        l.invalidate_cache();
    }
    return out;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

struct Activations {
    std::vector<size_t> offsets;  // per-utterance column offsets, size B+1
    Matrix h0;   // embedding output, d x N
    Matrix a1;   // tanh(conv), d x N
    Matrix a2;   // tanh(fc1), d x N
    Matrix a3;   // tanh(fc2), d x N
    Matrix pooled;  // d x B
    Matrix logits;  // classes x B
};

void add_bias(Matrix& m, const std::vector<float>& bias) {
    for (int i = 0; i < m.rows; ++i) {
        float* row = &m.data[static_cast<size_t>(i) * m.cols];
        const float b = bias[i];
        for (int j = 0; j < m.cols; ++j) row[j] += b;
    }
}

void tanh_inplace(Matrix& m) {
    for (float& v : m.data) v = std::tanh(v);
}

// depthwise width-3 same-padding convolution, applied per segment
Matrix conv_forward(const Matrix& h0, const Matrix& kernel, const std::vector<float>& bias,
                    const std::vector<size_t>& offsets) {
    Matrix c(h0.rows, h0.cols);
    for (int ch = 0; ch < h0.rows; ++ch) {
        const float k0 = kernel.at(ch, 0), k1 = kernel.at(ch, 1), k2 = kernel.at(ch, 2);
        const float b = bias[ch];
        const float* in = &h0.data[static_cast<size_t>(ch) * h0.cols];
        float* out = &c.data[static_cast<size_t>(ch) * c.cols];
        for (size_t u = 0; u + 1 < offsets.size(); ++u) {
            const size_t lo = offsets[u], hi = offsets[u + 1];
            for (size_t t = lo; t < hi; ++t) {
                float acc = b + k1 * in[t];
                if (t > lo) acc += k0 * in[t - 1];
                if (t + 1 < hi) acc += k2 * in[t + 1];
                out[t] = acc;
            }
        }
    }
    return c;
}

const LoraAdapter* find_adapter(const AdapterSet* adapters, const std::string& id) {
    if (!adapters) return nullptr;
    auto it = adapters->adapters.find(id);
    return it == adapters->adapters.end() ? nullptr : &it->second;
}

Matrix linear_layer_forward(const Layer& l, const Matrix& x, const NormalFloatCodebook& cb,
                            const AdapterSet* adapters) {
    const Matrix& w = l.base_weight(cb);
    const LoraAdapter* ad = l.lora_attached ? find_adapter(adapters, l.id) : nullptr;
    Matrix y = ad ? lora_forward(w, *ad, x) : matmul(w, x);
    if (!l.bias.empty()) add_bias(y, l.bias);
    return y;
}

Activations run_forward(const ToyModel& model, const std::vector<Utterance>& batch,
                        const NormalFloatCodebook& cb, const AdapterSet* adapters) {
    if (batch.empty()) throw Error::validation("forward: empty batch");
    Activations act;
    act.offsets.push_back(0);
    size_t n = 0;
    for (const auto& u : batch) {
        if (u.tokens.empty()) throw Error::validation("forward: empty utterance");
        n += u.tokens.size();
        act.offsets.push_back(n);
    }

    const Layer& embed = model.layer("embed");
    const Matrix& e = embed.base_weight(cb);  // vocab x d
    const int d = model.d_model;
    act.h0 = Matrix(d, static_cast<int>(n));
    size_t col = 0;
    for (const auto& u : batch) {
        for (int tok : u.tokens) {
            if (tok < 0 || tok >= model.vocab)
                throw Error::validation("forward: token id " + std::to_string(tok) +
                                        " out of range");
            for (int c = 0; c < d; ++c) act.h0.at(c, static_cast<int>(col)) = e.at(tok, c);
            ++col;
        }
    }

    const Layer& conv = model.layer("conv");
    act.a1 = conv_forward(act.h0, conv.base_weight(cb), conv.bias, act.offsets);
    tanh_inplace(act.a1);

    act.a2 = linear_layer_forward(model.layer("fc1"), act.a1, cb, adapters);
    tanh_inplace(act.a2);
    act.a3 = linear_layer_forward(model.layer("fc2"), act.a2, cb, adapters);
    tanh_inplace(act.a3);

    const int b = static_cast<int>(batch.size());
    act.pooled = Matrix(d, b);
    for (int u = 0; u < b; ++u) {
        const size_t lo = act.offsets[u], hi = act.offsets[u + 1];
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            const float* row = &act.a3.data[static_cast<size_t>(c) * act.a3.cols];
            for (size_t t = lo; t < hi; ++t) acc += row[t];
            act.pooled.at(c, u) = static_cast<float>(acc * inv);
        }
    }

    act.logits = linear_layer_forward(model.layer("head"), act.pooled, cb, adapters);
    return act;
}

// per-column softmax cross entropy; fills dlogits (scaled by 1/B) when given
double softmax_ce(const Matrix& logits, const std::vector<Utterance>& batch,
                  Matrix* dlogits) {
    const int classes = logits.rows;
    const int b = logits.cols;
    double total = 0.0;
    if (dlogits) *dlogits = Matrix(classes, b);
    for (int u = 0; u < b; ++u) {
        const int y = batch[u].label;
        if (y < 0 || y >= classes) throw Error::validation("loss: label out of range");
        double mx = logits.at(0, u);
        for (int c = 1; c < classes; ++c) mx = std::max<double>(mx, logits.at(c, u));
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) sum += std::exp(logits.at(c, u) - mx);
        total += -(logits.at(y, u) - mx - std::log(sum));
        if (dlogits) {
            for (int c = 0; c < classes; ++c) {
                double p = std::exp(logits.at(c, u) - mx) / sum;
                dlogits->at(c, u) =
                    static_cast<float>((p - (c == y ? 1.0 : 0.0)) / b);
            }
        }
    }
    return total / b;
}

}  // namespace

Matrix forward(const ToyModel& model, const std::vector<Utterance>& batch,
               const NormalFloatCodebook& cb, const AdapterSet* adapters) {
    return run_forward(model, batch, cb, adapters).logits;
}

double loss(const ToyModel& model, const std::vector<Utterance>& batch,
            const NormalFloatCodebook& cb, const AdapterSet* adapters) {
    Activations act = run_forward(model, batch, cb, adapters);
    return softmax_ce(act.logits, batch, nullptr);
}

namespace {

struct Grads {
    double loss_value = 0.0;
    // full-model grads (full_finetune)
    Matrix g_embed, g_conv, g_fc1, g_fc2, g_head;
    std::vector<float> gb_conv, gb_fc1, gb_fc2, gb_head;
    // adapter grads (lora_only), keyed by layer id
    std::map<std::string, LoraGrads> adapter;
};

std::vector<float> row_sums(const Matrix& m) {
    std::vector<float> s(m.rows);
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const float* row = &m.data[static_cast<size_t>(i) * m.cols];
        for (int j = 0; j < m.cols; ++j) acc += row[j];
        s[i] = static_cast<float>(acc);
    }
    return s;
}

Matrix tanh_grad(const Matrix& post, const Matrix& upstream) {
    Matrix g(post.rows, post.cols);
    for (size_t i = 0; i < post.size(); ++i)
        g.data[i] = upstream.data[i] * (1.0f - post.data[i] * post.data[i]);
    return g;
}

Grads run_backward(const ToyModel& model, const std::vector<Utterance>& batch,
                   const NormalFloatCodebook& cb, const AdapterSet* adapters,
                   TrainMode mode) {
    Activations act = run_forward(model, batch, cb, adapters);
    Grads g;
    Matrix dlogits;
    g.loss_value = softmax_ce(act.logits, batch, &dlogits);

    const bool full = mode == TrainMode::full_finetune;
    const Layer& head = model.layer("head");
    if (full) {
        g.g_head = matmul(dlogits, transpose(act.pooled));
        g.gb_head = row_sums(dlogits);
    }
    Matrix g_pooled = matmul(transpose(head.base_weight(cb)), dlogits);

    // unpool: spread each utterance's gradient evenly over its columns
    Matrix g_a3(act.a3.rows, act.a3.cols);
    for (size_t u = 0; u + 1 < act.offsets.size(); ++u) {
        const size_t lo = act.offsets[u], hi = act.offsets[u + 1];
        const float inv = 1.0f / static_cast<float>(hi - lo);
        for (int c = 0; c < g_a3.rows; ++c) {
            const float v = g_pooled.at(c, static_cast<int>(u)) * inv;
            float* row = &g_a3.data[static_cast<size_t>(c) * g_a3.cols];
            for (size_t t = lo; t < hi; ++t) row[t] = v;
        }
    }

    Matrix g_z3 = tanh_grad(act.a3, g_a3);
    const Layer& fc2 = model.layer("fc2");
    const LoraAdapter* ad2 = fc2.lora_attached ? find_adapter(adapters, "fc2") : nullptr;
    Matrix g_a2;
    if (ad2) {
        LoraGrads lg = lora_backward(fc2.base_weight(cb), *ad2, act.a2, g_z3);
        g_a2 = std::move(lg.gx);
        g.adapter["fc2"] = {std::move(lg.ga), std::move(lg.gb), Matrix{}};
    } else {
        g_a2 = matmul(transpose(fc2.base_weight(cb)), g_z3);
    }
    if (full) {
        g.g_fc2 = matmul(g_z3, transpose(act.a2));
        g.gb_fc2 = row_sums(g_z3);
    }

    Matrix g_z2 = tanh_grad(act.a2, g_a2);
    const Layer& fc1 = model.layer("fc1");
    const LoraAdapter* ad1 = fc1.lora_attached ? find_adapter(adapters, "fc1") : nullptr;
    if (ad1) {
        // gx below fc1 is only needed when the base is trained too
        if (full) {
            LoraGrads lg = lora_backward(fc1.base_weight(cb), *ad1, act.a1, g_z2);
            g.adapter["fc1"] = {std::move(lg.ga), std::move(lg.gb), Matrix{}};
        } else {
            const float s = ad1->multiplier();
            Matrix ax = matmul(ad1->a, act.a1);
            Matrix bt_gy = matmul(transpose(ad1->b), g_z2);
            LoraGrads lg;
            lg.gb = scale(matmul(g_z2, transpose(ax)), s);
            lg.ga = scale(matmul(bt_gy, transpose(act.a1)), s);
            g.adapter["fc1"] = std::move(lg);
        }
    }
    if (full) {
        g.g_fc1 = matmul(g_z2, transpose(act.a1));
        g.gb_fc1 = row_sums(g_z2);

        Matrix base_gx = matmul(transpose(fc1.base_weight(cb)), g_z2);
        if (ad1) {
            const float s = ad1->multiplier();
            Matrix extra = scale(matmul(transpose(ad1->a),
                                        matmul(transpose(ad1->b), g_z2)), s);
            base_gx = add(base_gx, extra);
        }
        Matrix g_c = tanh_grad(act.a1, base_gx);

        const Layer& conv = model.layer("conv");
        const Matrix& kernel = conv.base_weight(cb);
        g.g_conv = Matrix(kernel.rows, 3);
        g.gb_conv = row_sums(g_c);
        Matrix g_h0(act.h0.rows, act.h0.cols);
        for (int ch = 0; ch < act.h0.rows; ++ch) {
            const float* in = &act.h0.data[static_cast<size_t>(ch) * act.h0.cols];
            const float* gc = &g_c.data[static_cast<size_t>(ch) * g_c.cols];
            float* gh = &g_h0.data[static_cast<size_t>(ch) * g_h0.cols];
            const float k0 = kernel.at(ch, 0), k1 = kernel.at(ch, 1), k2 = kernel.at(ch, 2);
            double gk0 = 0.0, gk1 = 0.0, gk2 = 0.0;
            for (size_t u = 0; u + 1 < act.offsets.size(); ++u) {
                const size_t lo = act.offsets[u], hi = act.offsets[u + 1];
                for (size_t t = lo; t < hi; ++t) {
                    gk1 += static_cast<double>(gc[t]) * in[t];
                    if (t > lo) gk0 += static_cast<double>(gc[t]) * in[t - 1];
                    if (t + 1 < hi) gk2 += static_cast<double>(gc[t]) * in[t + 1];
                    float acc = k1 * gc[t];
                    if (t > lo) acc += k2 * gc[t - 1];
                    if (t + 1 < hi) acc += k0 * gc[t + 1];
                    gh[t] = acc;
                }
            }
            g.g_conv.at(ch, 0) = static_cast<float>(gk0);
            g.g_conv.at(ch, 1) = static_cast<float>(gk1);
            g.g_conv.at(ch, 2) = static_cast<float>(gk2);
        }

        const Layer& embed = model.layer("embed");
        g.g_embed = Matrix(embed.weight.rows, embed.weight.cols);
        size_t col = 0;
        for (const auto& utt : batch) {
            for (int tok : utt.tokens) {
                for (int c = 0; c < g_h0.rows; ++c)
                    g.g_embed.at(tok, c) += g_h0.at(c, static_cast<int>(col));
                ++col;
            }
        }
    }
    return g;
}

// Adam/SGD over a fixed list of parameter vectors
struct ParamSlot {
    std::vector<float>* param;
    std::vector<double> m, v;
};

class Optimiser {
public:
    Optimiser(const TrainConfig& cfg) : cfg_(cfg) {}

    void attach(std::vector<float>* p) {
        slots_.push_back({p, std::vector<double>(p->size(), 0.0),
                          std::vector<double>(p->size(), 0.0)});
    }

    // grads must align with attach() order
    void step(const std::vector<const std::vector<float>*>& grads) {
        ++t_;
        for (size_t s = 0; s < slots_.size(); ++s) {
            auto& slot = slots_[s];
            const auto& g = *grads[s];
            if (cfg_.optimiser == OptimiserKind::sgd) {
                for (size_t i = 0; i < g.size(); ++i)
                    (*slot.param)[i] -= static_cast<float>(cfg_.lr * g[i]);
            } else {
                const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
                const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
                for (size_t i = 0; i < g.size(); ++i) {
                    slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g[i];
                    slot.v[i] = cfg_.beta2 * slot.v[i] +
                                (1.0 - cfg_.beta2) * static_cast<double>(g[i]) * g[i];
                    const double mhat = slot.m[i] / bc1;
                    const double vhat = slot.v[i] / bc2;
                    (*slot.param)[i] -=
                        static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
                }
            }
        }
    }

private:
    TrainConfig cfg_;
    std::vector<ParamSlot> slots_;
    int t_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
    if (lr <= 0.0 || steps < 0 || batch_size < 1 || beta1 <= 0.0 || beta2 <= 0.0 ||
        eps <= 0.0)
        throw Error::validation("TrainConfig: hyperparameters must be positive");
}

TrainResult train(ToyModel& model, AdapterSet* adapters,
                  const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& dev_set, const TrainConfig& cfg,
                  const NormalFloatCodebook& cb) {
    cfg.validate();
    if (train_set.empty()) throw Error::validation("train: empty train set");

    std::vector<std::string> attached;
    for (const auto& l : model.layers)
        if (l.lora_attached) attached.push_back(l.id);

    if (cfg.mode == TrainMode::lora_only) {
        if (!adapters || attached.empty())
            throw Error::validation("train: lora_only requires attached adapters");
        for (const auto& id : attached)
            if (!adapters->adapters.count(id))
                throw Error::validation("train: no adapter for layer " + id);
    } else {
        if (model.any_quantised())
            throw Error::validation("train: full_finetune requires an FP32 model");
    }

    TrainResult result;
    result.initial_dev_loss = dev_set.empty() ? 0.0 : loss(model, dev_set, cb, adapters);

    Optimiser opt(cfg);
    if (cfg.mode == TrainMode::lora_only) {
        for (const auto& id : attached) {
            auto& ad = adapters->adapters.at(id);
            opt.attach(&ad.a.data);
            opt.attach(&ad.b.data);
        }
    } else {
        for (auto& l : model.layers) {
            opt.attach(&l.weight.data);
            if (!l.bias.empty()) opt.attach(&l.bias);
        }
    }

    Rng rng = Rng(cfg.seed).fork(0x7261696eULL);
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<Utterance> batch;
        batch.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i)
            batch.push_back(train_set[rng.uniform_int(train_set.size())]);

        Grads g = run_backward(model, batch, cb, adapters, cfg.mode);

        std::vector<const std::vector<float>*> grads;
        if (cfg.mode == TrainMode::lora_only) {
            for (const auto& id : attached) {
                grads.push_back(&g.adapter.at(id).ga.data);
                grads.push_back(&g.adapter.at(id).gb.data);
            }
        } else {
            for (auto& l : model.layers) {
                Matrix* gw = nullptr;
                std::vector<float>* gb = nullptr;
                if (l.id == "embed") gw = &g.g_embed;
                else if (l.id == "conv") { gw = &g.g_conv; gb = &g.gb_conv; }
                else if (l.id == "fc1") { gw = &g.g_fc1; gb = &g.gb_fc1; }
                else if (l.id == "fc2") { gw = &g.g_fc2; gb = &g.gb_fc2; }
                else { gw = &g.g_head; gb = &g.gb_head; }
                grads.push_back(&gw->data);
                if (!l.bias.empty()) grads.push_back(gb);
            }
            for (auto& l : model.layers) l.invalidate_cache();
        }
        opt.step(grads);

        LossRecord rec;
        rec.step = step + 1;
        rec.train_loss = g.loss_value;
        if (!dev_set.empty() && ((step + 1) % 50 == 0 || step + 1 == cfg.steps))
            rec.dev_loss = loss(model, dev_set, cb, adapters);
        result.curve.push_back(rec);
    }
    result.final_dev_loss = cfg.steps == 0
                                ? result.initial_dev_loss
                                : (dev_set.empty() ? 0.0
                                                   : loss(model, dev_set, cb, adapters));
    return result;
}

double evaluate(const ToyModel& model, const std::vector<Utterance>& dataset,
                const NormalFloatCodebook& cb, const AdapterSet* adapters) {
    if (dataset.empty()) throw Error::validation("evaluate: empty dataset");
    size_t wrong = 0;
    const size_t chunk = 128;
    for (size_t start = 0; start < dataset.size(); start += chunk) {
        const size_t end = std::min(dataset.size(), start + chunk);
        std::vector<Utterance> batch(dataset.begin() + start, dataset.begin() + end);
        Matrix logits = forward(model, batch, cb, adapters);
        for (int u = 0; u < logits.cols; ++u) {
            int best = 0;
            for (int c = 1; c < logits.rows; ++c)
                if (logits.at(c, u) > logits.at(best, u)) best = c;
            if (best != batch[u].label) ++wrong;
        }
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(dataset.size());
}

std::vector<int> pseudo_label(const ToyModel& teacher,
                              const std::vector<Utterance>& inputs,
                              const NormalFloatCodebook& cb,
                              const AdapterSet* adapters) {
    std::vector<int> labels;
    labels.reserve(inputs.size());
    const size_t chunk = 128;
    for (size_t start = 0; start < inputs.size(); start += chunk) {
        const size_t end = std::min(inputs.size(), start + chunk);
        std::vector<Utterance> batch(inputs.begin() + start, inputs.begin() + end);
        Matrix logits = forward(teacher, batch, cb, adapters);
        for (int u = 0; u < logits.cols; ++u) {
            int best = 0;
            for (int c = 1; c < logits.rows; ++c)
                if (logits.at(c, u) > logits.at(best, u)) best = c;
            labels.push_back(best);
        }
    }
    return labels;
}

AdapterSet init_adapters(const ToyModel& model, int rank, float alpha, uint64_t seed,
                         const std::string& speaker_id) {
    AdapterSet set;
    set.speaker_id = speaker_id;
    Rng root(seed);
    uint64_t stream = 100;
    for (const auto& l : model.layers) {
        if (!l.lora_attached) continue;
        Rng r = root.fork(stream++);
        set.adapters.emplace(l.id, init_adapter(l.out_dim(), l.in_dim(), rank, alpha, r));
    }
    return set;
}

}  // namespace pqm
