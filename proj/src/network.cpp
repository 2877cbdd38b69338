#include "phemonet/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "phemonet/errors.hpp"

namespace phemonet::network {

namespace {

constexpr std::array<std::string_view, kModalityCount> kNames = {"eye", "gsr", "eeg", "ecg"};

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer_index) { return mix_seed(seed, layer_index); }

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

// upstream masked by (input > 0).
Matrix relu_backward(const Matrix& relu_input, const Matrix& upstream) {
    Matrix out = upstream;
    auto in = relu_input.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i)
        if (!(in[i] > 0.0)) o[i] = 0.0;
    return out;
}

void hadamard_inplace(Matrix& x, const Matrix& mask) {
    auto d = x.data();
    auto m = mask.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= m[i];
}

std::vector<double> column_sums(const Matrix& x) {
    std::vector<double> s(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) s[c] += row[c];
    }
    return s;
}

BatchNormCache eval_cache(const BatchNormState& state, const Matrix& x) {
    BatchNormCache cache{.mode = Mode::Eval, .xhat = Matrix(x.rows(), x.cols()), .inv_std = {}};
    cache.inv_std.resize(state.width());
    for (std::size_t c = 0; c < state.width(); ++c) cache.inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto h = cache.xhat.row(r);
        for (std::size_t c = 0; c < state.width(); ++c) h[c] = (in[c] - state.running_mean[c]) * cache.inv_std[c];
    }
    return cache;
}

// Shared block forward. stats receives running-stat updates in train mode; it may alias
// block.bn or be null for const inference.
Matrix block_forward(const Block& block, BatchNormState* stats, BlockOrder order, const Matrix& x, Mode mode,
                     double dropout, Rng* rng, BlockCache* cache) {
    Matrix z = phm::forward(block.phm, x);
    BatchNormCache bn_cache;
    auto normalize = [&](const Matrix& in) {
        if (mode == Mode::Train) return batchnorm_forward(*stats, in, mode, cache ? &bn_cache : nullptr);
        if (cache) bn_cache = eval_cache(block.bn, in);
        return batchnorm_infer(block.bn, in);
    };

    Matrix relu_in(1, 1);
    Matrix out(1, 1);
    if (order == BlockOrder::NormThenRelu) {
        relu_in = normalize(z);
        out = relu(relu_in);
    } else {
        relu_in = z;
        out = normalize(relu(z));
    }

    Matrix mask(1, 1);
    const bool drop = mode == Mode::Train && dropout > 0.0;
    if (drop) {
        mask = Matrix(out.rows(), out.cols());
        const double keep = 1.0 - dropout;
        const double scale = 1.0 / keep;
        for (double& m : mask.data()) m = rng->bernoulli(keep) ? scale : 0.0;
        hadamard_inplace(out, mask);
    }

    if (cache) {
        cache->input = x;
        cache->relu_input = std::move(relu_in);
        cache->bn = std::move(bn_cache);
        cache->has_dropout = drop;
        cache->dropout_mask = std::move(mask);
    }
    return out;
}

// Writes gradients into grad_block and returns dL/dx (or an unused matrix if !need_dx).
Matrix block_backward(const Block& block, BlockOrder order, const BlockCache& cache, Matrix upstream,
                      Block& grad_block, bool need_dx) {
    if (cache.has_dropout) hadamard_inplace(upstream, cache.dropout_mask);

    Matrix dz(1, 1);
    BatchNormGradients bn_grads;
    if (order == BlockOrder::NormThenRelu) {
        bn_grads = batchnorm_backward(block.bn, cache.bn, relu_backward(cache.relu_input, upstream));
        dz = std::move(bn_grads.dx);
    } else {
        bn_grads = batchnorm_backward(block.bn, cache.bn, upstream);
        dz = relu_backward(cache.relu_input, bn_grads.dx);
    }
    grad_block.bn.gamma = std::move(bn_grads.dgamma);
    grad_block.bn.beta = std::move(bn_grads.dbeta);

    phm::PhmGradients g = phm::backward(block.phm, cache.input, dz, need_dx);
    grad_block.phm.A = std::move(g.dA);
    grad_block.phm.F = std::move(g.dF);
    grad_block.phm.b = std::move(g.db);
    return std::move(g.dx);
}

Block zeroed_like(const Block& block) {
    Block z = block;
    for (auto& a : z.phm.A) a *= 0.0;
    for (auto& f : z.phm.F) f *= 0.0;
    std::fill(z.phm.b.begin(), z.phm.b.end(), 0.0);
    for (auto* v : {&z.bn.gamma, &z.bn.beta, &z.bn.running_mean, &z.bn.running_var})
        std::fill(v->begin(), v->end(), 0.0);
    return z;
}

Matrix concat_columns(const ModalityBatch& parts) {
    const std::size_t batch = parts[0].rows();
    std::size_t width = 0;
    for (const auto& p : parts) {
        if (p.rows() != batch) throw ShapeError("fusion: embeddings disagree on batch size");
        width += p.cols();
    }
    Matrix out(batch, width);
    for (std::size_t r = 0; r < batch; ++r) {
        std::size_t offset = 0;
        for (const auto& p : parts) {
            auto src = p.row(r);
            std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
            offset += p.cols();
        }
    }
    return out;
}

void check_embeddings(const ModelConfig& config, const ModalityBatch& embeddings) {
    for (Modality m : kModalityOrder) {
        const auto& e = embeddings[slot(m)];
        if (e.cols() != config.spec(m).hidden) {
            throw ConfigError("fusion: embedding for " + std::string(modality_name(m)) + " has width " +
                              std::to_string(e.cols()) + ", expected " + std::to_string(config.spec(m).hidden));
        }
    }
}

void check_input(const ModelConfig& config, Modality m, const Matrix& x) {
    const auto& spec = config.spec(m);
    if (x.cols() != spec.input_width()) {
        throw ShapeError("encoder " + std::string(modality_name(m)) + ": input width " + std::to_string(x.cols()) +
                         ", expected " + std::to_string(spec.input_width()));
    }
}

// Shared model forward; stats == nullptr only for eval.
Matrix forward_impl(const ModelParams& model, ModelParams* stats, const ModalityBatch& batch, Mode mode, Rng* rng,
                    ForwardCache* cache) {
    const auto& cfg = model.config;
    ModalityBatch embeddings;
    for (Modality m : kModalityOrder) {
        const auto i = slot(m);
        check_input(cfg, m, batch[i]);
        embeddings[i] = block_forward(model.encoders[i], stats ? &stats->encoders[i].bn : nullptr, cfg.order,
                                      batch[i], mode, 0.0, nullptr, cache ? &cache->encoders[i] : nullptr);
    }
    check_embeddings(cfg, embeddings);
    Matrix h = concat_columns(embeddings);
    if (cache) cache->fusion.resize(model.fusion.size());
    for (std::size_t l = 0; l < model.fusion.size(); ++l) {
        h = block_forward(model.fusion[l], stats ? &stats->fusion[l].bn : nullptr, cfg.order, h, mode, cfg.dropout,
                          rng, cache ? &cache->fusion[l] : nullptr);
    }
    if (cache) cache->classifier_input = h;
    return dense_forward(model.classifier, h);
}

}  // namespace

std::string_view modality_name(Modality m) { return kNames[slot(m)]; }

Modality parse_modality(std::string_view name) {
    for (Modality m : kModalityOrder)
        if (kNames[slot(m)] == name) return m;
    throw ConfigError("unknown modality '" + std::string(name) + "'");
}

std::vector<ModalitySpec> default_specs(std::size_t eye_rate) {
    const std::size_t seg = kSignalRate * kSegmentSeconds;
    return {
        {.modality = Modality::Eye, .n = 4, .channels = 4, .samples_per_segment = eye_rate * kSegmentSeconds, .hidden = 128},
        {.modality = Modality::Gsr, .n = 1, .channels = 1, .samples_per_segment = seg, .hidden = 131},
        {.modality = Modality::Eeg, .n = 10, .channels = 10, .samples_per_segment = seg, .hidden = 1020},
        {.modality = Modality::Ecg, .n = 3, .channels = 3, .samples_per_segment = seg, .hidden = 513},
    };
}

std::vector<ModalitySpec> tiny_specs() {
    return {
        {.modality = Modality::Eye, .n = 4, .channels = 4, .samples_per_segment = 3, .hidden = 8},
        {.modality = Modality::Gsr, .n = 1, .channels = 1, .samples_per_segment = 5, .hidden = 4},
        {.modality = Modality::Eeg, .n = 10, .channels = 10, .samples_per_segment = 2, .hidden = 40},
        {.modality = Modality::Ecg, .n = 3, .channels = 3, .samples_per_segment = 3, .hidden = 12},
    };
}

std::string_view block_order_name(BlockOrder order) {
    return order == BlockOrder::NormThenRelu ? "bn_relu" : "relu_bn";
}

BlockOrder parse_block_order(std::string_view name) {
    if (name == "bn_relu") return BlockOrder::NormThenRelu;
    if (name == "relu_bn") return BlockOrder::ReluThenNorm;
    throw ConfigError("unknown block order '" + std::string(name) + "' (expected bn_relu or relu_bn)");
}

BatchNormState make_batchnorm(std::size_t width, double momentum, double eps) {
    return BatchNormState{.gamma = std::vector<double>(width, 1.0),
                          .beta = std::vector<double>(width, 0.0),
                          .running_mean = std::vector<double>(width, 0.0),
                          .running_var = std::vector<double>(width, 1.0),
                          .momentum = momentum,
                          .eps = eps};
}

Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache) {
    if (x.cols() != state.width()) {
        throw ShapeError("batchnorm: input " + x.shape_string() + " for width " + std::to_string(state.width()));
    }
    if (mode == Mode::Eval) {
        if (cache) *cache = eval_cache(state, x);
        return batchnorm_infer(state, x);
    }

    const std::size_t batch = x.rows();
    if (batch < 2) throw NumericError("batchnorm: train mode needs a batch of at least 2 (got 1)");
    const std::size_t w = state.width();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    std::vector<double> mean = column_sums(x);
    for (double& m : mean) m *= inv_batch;
    std::vector<double> var(w, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < w; ++c) {
            const double d = row[c] - mean[c];
            var[c] += d * d;
        }
    }
    for (double& v : var) v *= inv_batch;

    std::vector<double> inv_std(w);
    for (std::size_t c = 0; c < w; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + state.eps);

    Matrix xhat(batch, w);
    Matrix out(batch, w);
    for (std::size_t r = 0; r < batch; ++r) {
        auto in = x.row(r);
        auto h = xhat.row(r);
        auto o = out.row(r);
        for (std::size_t c = 0; c < w; ++c) {
            h[c] = (in[c] - mean[c]) * inv_std[c];
            o[c] = h[c] * state.gamma[c] + state.beta[c];
        }
    }

    const double m = state.momentum;
    for (std::size_t c = 0; c < w; ++c) {
        state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mean[c];
        state.running_var[c] = (1.0 - m) * state.running_var[c] + m * var[c];
    }

    if (cache) {
        cache->mode = Mode::Train;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Matrix batchnorm_infer(const BatchNormState& state, const Matrix& x) {
    if (x.cols() != state.width()) {
        throw ShapeError("batchnorm: input " + x.shape_string() + " for width " + std::to_string(state.width()));
    }
    Matrix out(x.rows(), x.cols());
    const std::size_t w = state.width();
    std::vector<double> scale(w), shift(w);
    for (std::size_t c = 0; c < w; ++c) {
        scale[c] = state.gamma[c] / std::sqrt(state.running_var[c] + state.eps);
        shift[c] = state.beta[c] - state.running_mean[c] * scale[c];
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto o = out.row(r);
        for (std::size_t c = 0; c < w; ++c) o[c] = in[c] * scale[c] + shift[c];
    }
    return out;
}

BatchNormGradients batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache,
                                      const Matrix& upstream) {
    const std::size_t batch = upstream.rows();
    const std::size_t w = state.width();
    if (upstream.cols() != w || cache.inv_std.size() != w) {
        throw ShapeError("batchnorm backward: upstream " + upstream.shape_string() + " for width " + std::to_string(w));
    }
    BatchNormGradients g{.dgamma = std::vector<double>(w, 0.0), .dbeta = column_sums(upstream), .dx = Matrix(batch, w)};

    if (cache.xhat.rows() != batch || cache.xhat.cols() != w) {
        throw ShapeError("batchnorm backward: cache does not match upstream " + upstream.shape_string());
    }
    std::vector<double> sum_u_xhat(w, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
        auto u = upstream.row(r);
        auto h = cache.xhat.row(r);
        for (std::size_t c = 0; c < w; ++c) sum_u_xhat[c] += u[c] * h[c];
    }
    g.dgamma = sum_u_xhat;

    if (cache.mode == Mode::Eval) {
        for (std::size_t r = 0; r < batch; ++r) {
            auto u = upstream.row(r);
            auto d = g.dx.row(r);
            for (std::size_t c = 0; c < w; ++c) d[c] = u[c] * state.gamma[c] * cache.inv_std[c];
        }
        return g;
    }

    const double nb = static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        auto u = upstream.row(r);
        auto h = cache.xhat.row(r);
        auto d = g.dx.row(r);
        for (std::size_t c = 0; c < w; ++c) {
            d[c] = state.gamma[c] * cache.inv_std[c] / nb * (nb * u[c] - g.dbeta[c] - h[c] * sum_u_xhat[c]);
        }
    }
    return g;
}

DenseLayer init_dense(std::size_t d_in, std::size_t d_out, std::uint64_t seed) {
    DenseLayer layer{.W = Matrix(d_out, d_in), .b = std::vector<double>(d_out, 0.0)};
    Rng rng(seed);
    const double s = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
    for (double& v : layer.W.data()) v = rng.uniform(-s, s);
    return layer;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    if (x.cols() != layer.W.cols()) {
        throw ShapeError("dense: input " + x.shape_string() + " for weight " + layer.W.shape_string());
    }
    Matrix y = matmul_nt(x, layer.W);
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        for (std::size_t c = 0; c < y.cols(); ++c) row[c] += layer.b[c];
    }
    return y;
}

std::size_t ModelConfig::fusion_width() const {
    std::size_t total = 0;
    for (const auto& s : specs) total += s.hidden;
    return total;
}

const ModalitySpec& ModelConfig::spec(Modality m) const {
    for (const auto& s : specs)
        if (s.modality == m) return s;
    throw ConfigError("missing modality " + std::string(modality_name(m)));
}

ModelConfig default_config(std::size_t eye_rate) {
    ModelConfig c;
    c.specs = default_specs(eye_rate);
    return c;
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.specs = tiny_specs();
    return c;
}

void validate_config(ModelConfig& config) {
    std::set<Modality> seen;
    for (const auto& s : config.specs) {
        const std::string name(modality_name(s.modality));
        if (!seen.insert(s.modality).second) throw ConfigError("duplicate modality " + name);
        if (s.n == 0 || s.channels == 0 || s.samples_per_segment == 0 || s.hidden == 0) {
            throw ConfigError("modality " + name + ": n, channels, samples and hidden must be positive");
        }
        if (s.input_width() % s.n != 0) {
            throw ConfigError("modality " + name + ": input width " + std::to_string(s.input_width()) +
                              " not divisible by n=" + std::to_string(s.n));
        }
        if (s.hidden % s.n != 0) {
            throw ConfigError("modality " + name + ": hidden width " + std::to_string(s.hidden) +
                              " not divisible by n=" + std::to_string(s.n));
        }
    }
    for (Modality m : kModalityOrder)
        if (!seen.contains(m)) throw ConfigError("missing modality " + std::string(modality_name(m)));
    std::sort(config.specs.begin(), config.specs.end(),
              [](const ModalitySpec& a, const ModalitySpec& b) { return slot(a.modality) < slot(b.modality); });

    if (config.fusion_n == 0 || config.fusion_layers == 0 || config.num_classes == 0) {
        throw ConfigError("fusion_n, fusion_layers and num_classes must be positive");
    }
    std::size_t width = config.fusion_width();
    for (std::size_t l = 0; l < config.fusion_layers; ++l) {
        const std::size_t out = width / 2;
        if (width % 2 != 0 || width % config.fusion_n != 0 || out % config.fusion_n != 0 || out == 0) {
            throw ConfigError("fusion layer " + std::to_string(l + 1) + ": widths " + std::to_string(width) + "->" +
                              std::to_string(out) + " not divisible by n=" + std::to_string(config.fusion_n));
        }
        width = out;
    }
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!(config.bn_momentum >= 0.0 && config.bn_momentum <= 1.0)) throw ConfigError("batchnorm momentum must lie in [0, 1]");
    if (!(config.bn_eps > 0.0)) throw ConfigError("batchnorm eps must be positive");
}

ModelParams build_model(const std::vector<ModalitySpec>& specs, std::uint64_t seed) {
    ModelConfig c;
    c.specs = specs;
    return build_model(std::move(c), seed);
}

ModelParams build_model(ModelConfig config, std::uint64_t seed) {
    validate_config(config);
    ModelParams model;
    std::size_t layer_index = 0;
    for (Modality m : kModalityOrder) {
        const auto& s = config.spec(m);
        model.encoders[slot(m)] =
            Block{.phm = phm::init(s.n, s.input_width(), s.hidden, layer_seed(seed, layer_index++), config.init_scheme),
                  .bn = make_batchnorm(s.hidden, config.bn_momentum, config.bn_eps)};
    }
    std::size_t width = config.fusion_width();
    for (std::size_t l = 0; l < config.fusion_layers; ++l) {
        model.fusion.push_back(
            Block{.phm = phm::init(config.fusion_n, width, width / 2, layer_seed(seed, layer_index++), config.init_scheme),
                  .bn = make_batchnorm(width / 2, config.bn_momentum, config.bn_eps)});
        width /= 2;
    }
    model.classifier = init_dense(width, config.num_classes, layer_seed(seed, layer_index));
    model.config = std::move(config);
    return model;
}

Matrix encoder_forward(ModelParams& model, Modality modality, const Matrix& x, Mode mode, BlockCache* cache) {
    check_input(model.config, modality, x);
    Block& block = model.encoders[slot(modality)];
    return block_forward(block, &block.bn, model.config.order, x, mode, 0.0, nullptr, cache);
}

Matrix fusion_forward(ModelParams& model, const ModalityBatch& embeddings, Mode mode, Rng& rng, ForwardCache* cache) {
    check_embeddings(model.config, embeddings);
    Matrix h = concat_columns(embeddings);
    if (cache) cache->fusion.resize(model.fusion.size());
    for (std::size_t l = 0; l < model.fusion.size(); ++l) {
        h = block_forward(model.fusion[l], &model.fusion[l].bn, model.config.order, h, mode, model.config.dropout, &rng,
                          cache ? &cache->fusion[l] : nullptr);
    }
    if (cache) cache->classifier_input = h;
    return dense_forward(model.classifier, h);
}

Matrix model_forward(ModelParams& model, const ModalityBatch& batch, Mode mode, Rng& rng, ForwardCache* cache) {
    ModalityBatch embeddings;
    for (Modality m : kModalityOrder) {
        embeddings[slot(m)] =
            encoder_forward(model, m, batch[slot(m)], mode, cache ? &cache->encoders[slot(m)] : nullptr);
    }
    return fusion_forward(model, embeddings, mode, rng, cache);
}

Matrix model_predict(const ModelParams& model, const ModalityBatch& batch) {
    return forward_impl(model, nullptr, batch, Mode::Eval, nullptr, nullptr);
}

ModelParams model_backward(const ModelParams& model, const ForwardCache& cache, const Matrix& dlogits) {
    ModelParams grads;
    grads.config = model.config;
    for (std::size_t i = 0; i < kModalityCount; ++i) grads.encoders[i] = zeroed_like(model.encoders[i]);
    for (const auto& b : model.fusion) grads.fusion.push_back(zeroed_like(b));

    const Matrix& h = cache.classifier_input;
    if (dlogits.rows() != h.rows() || dlogits.cols() != model.classifier.W.rows()) {
        throw ShapeError("model backward: dlogits " + dlogits.shape_string() + " does not match forward cache");
    }
    grads.classifier.W = matmul_tn(dlogits, h);
    grads.classifier.b = column_sums(dlogits);
    Matrix upstream = matmul(dlogits, model.classifier.W);

    for (std::size_t l = model.fusion.size(); l-- > 0;) {
        upstream = block_backward(model.fusion[l], model.config.order, cache.fusion[l], std::move(upstream),
                                  grads.fusion[l], true);
    }

    std::size_t offset = 0;
    for (Modality m : kModalityOrder) {
        const auto i = slot(m);
        const std::size_t w = model.config.spec(m).hidden;
        block_backward(model.encoders[i], model.config.order, cache.encoders[i], upstream.col_block(offset, w),
                       grads.encoders[i], false);
        offset += w;
    }
    return grads;
}

namespace {

template <typename Group, typename Model>
std::vector<Group> collect_groups(Model& model) {
    std::vector<Group> groups;
    auto add_block = [&](const std::string& prefix, auto& block) {
        for (std::size_t i = 0; i < block.phm.A.size(); ++i)
            groups.push_back({prefix + ".A" + std::to_string(i), block.phm.A[i].data(), true});
        for (std::size_t i = 0; i < block.phm.F.size(); ++i)
            groups.push_back({prefix + ".F" + std::to_string(i), block.phm.F[i].data(), true});
        groups.push_back({prefix + ".bias", block.phm.b, true});
        groups.push_back({prefix + ".bn.gamma", block.bn.gamma, true});
        groups.push_back({prefix + ".bn.beta", block.bn.beta, true});
        groups.push_back({prefix + ".bn.running_mean", block.bn.running_mean, false});
        groups.push_back({prefix + ".bn.running_var", block.bn.running_var, false});
    };
    for (Modality m : kModalityOrder) add_block(std::string(modality_name(m)), model.encoders[slot(m)]);
    for (std::size_t l = 0; l < model.fusion.size(); ++l) add_block("fusion" + std::to_string(l + 1), model.fusion[l]);
    groups.push_back({"classifier.W", model.classifier.W.data(), true});
    groups.push_back({"classifier.bias", model.classifier.b, true});
    return groups;
}

}  // namespace

std::vector<ParamGroup> parameter_groups(ModelParams& model) { return collect_groups<ParamGroup>(model); }

std::vector<ConstParamGroup> parameter_groups(const ModelParams& model) {
    return collect_groups<ConstParamGroup>(model);
}

std::size_t element_count(const ModelParams& model) {
    std::size_t total = 0;
    for (const auto& g : parameter_groups(model)) total += g.values.size();
    return total;
}

std::size_t trainable_count(const ModelParams& model) {
    std::size_t total = 0;
    for (const auto& g : parameter_groups(model))
        if (g.trainable) total += g.values.size();
    return total;
}

std::size_t expected_element_count(const ModelConfig& config) {
    ModelConfig c = config;
    validate_config(c);
    std::size_t total = 0;
    for (const auto& s : c.specs) total += phm::param_count(s.n, s.input_width(), s.hidden) + 4 * s.hidden;
    std::size_t width = c.fusion_width();
    for (std::size_t l = 0; l < c.fusion_layers; ++l) {
        total += phm::param_count(c.fusion_n, width, width / 2) + 4 * (width / 2);
        width /= 2;
    }
    return total + width * c.num_classes + c.num_classes;
}

}  // namespace phemonet::network
