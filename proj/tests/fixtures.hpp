#pragma once

// Hand-wired models and datasets shared by the unit tests and the acceptance runner.

#include <array>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "phemonet/data.hpp"
#include "phemonet/network.hpp"
#include "phemonet/rng.hpp"

namespace fixture {

namespace net = phemonet::network;
namespace data = phemonet::data;
using phemonet::Matrix;

/// Tiny model whose prediction is chosen by the first two GSR samples:
/// (1, 0) -> class 0, (0, 1) -> class 1, (0, 0) -> class 2.
///
/// Every PHM layer uses A = {I, 0, ...} so W = I (x) F_0, and F_0 routes the two GSR values
/// straight through the fusion stack. Eval-mode batchnorm with running stats (0, 1) is the
/// identity up to 1/sqrt(1 + eps).
inline net::ModelParams routing_model() {
    net::ModelParams model = net::build_model(net::tiny_config(), 1);
    auto route = [](net::Block& block, std::size_t first_in) {
        auto& l = block.phm;
        for (std::size_t i = 0; i < l.n; ++i) {
            l.A[i] = i == 0 ? Matrix::identity(l.n) : Matrix(l.n, l.n);
            l.F[i] = Matrix(l.block_out(), l.block_in());
        }
        std::fill(l.b.begin(), l.b.end(), 0.0);
        if (first_in != SIZE_MAX) {
            l.F[0](0, first_in) = 1.0;
            l.F[0](1, first_in + 1) = 1.0;
        }
    };
    for (net::Modality m : net::kModalityOrder) route(model.encoders[net::slot(m)], m == net::Modality::Gsr ? 0 : SIZE_MAX);
    // The GSR embedding occupies concat columns 8..11, inside the first input block of fusion1.
    route(model.fusion[0], 8);
    route(model.fusion[1], 0);
    route(model.fusion[2], 0);
    model.classifier.W = Matrix(3, model.classifier.W.cols());
    model.classifier.W(0, 0) = 1.0;
    model.classifier.W(1, 1) = 1.0;
    model.classifier.b = {0.0, 0.0, 0.5};
    return model;
}

/// A tiny-shaped sample that routing_model() assigns to `predicted`.
inline data::Sample routed_sample(std::uint8_t truth, std::uint8_t predicted, data::Task task) {
    data::Sample s;
    for (const auto& spec : net::tiny_specs()) {
        auto& seg = s.segments[net::slot(spec.modality)];
        seg.sample_rate = 1.0;
        seg.data = Matrix(spec.channels, spec.samples_per_segment);
    }
    auto& gsr = s.segments[net::slot(net::Modality::Gsr)].data;
    if (predicted == 0) gsr(0, 0) = 1.0;
    if (predicted == 1) gsr(0, 1) = 1.0;
    (task == data::Task::Arousal ? s.arousal : s.valence) = truth;
    return s;
}

/// Samples realizing confusion[true][predicted].
inline std::vector<data::Sample> samples_for(const std::array<std::array<std::size_t, 3>, 3>& confusion,
                                             data::Task task) {
    std::vector<data::Sample> out;
    for (std::uint8_t t = 0; t < 3; ++t)
        for (std::uint8_t p = 0; p < 3; ++p)
            for (std::size_t k = 0; k < confusion[t][p]; ++k) out.push_back(routed_sample(t, p, task));
    return out;
}

inline data::Sample random_sample(phemonet::Rng& rng, std::size_t eye_rate, std::size_t seconds) {
    data::Sample s;
    for (net::Modality m : net::kModalityOrder) {
        const std::size_t rate = m == net::Modality::Eye ? eye_rate : net::kSignalRate;
        s.segments[net::slot(m)].sample_rate = static_cast<double>(rate);
        s.segments[net::slot(m)].data = oracle::random_matrix(data::expected_channels(m), rate * seconds, rng);
    }
    s.arousal = static_cast<std::uint8_t>(rng.next() % 3);
    s.valence = static_cast<std::uint8_t>(rng.next() % 3);
    s.subject_id = static_cast<std::uint32_t>(rng.next() % 1000);
    s.augmented = rng.bernoulli(0.3);
    return s;
}

/// Up to five samples of one or two seconds at a random eye rate.
inline data::Dataset random_dataset(phemonet::Rng& rng) {
    data::Dataset ds;
    ds.eye_rate = static_cast<std::uint16_t>(4 * (1 + rng.next() % 20));
    const std::size_t count = rng.next() % 6;
    const std::size_t seconds = 1 + rng.next() % 2;
    for (std::size_t i = 0; i < count; ++i) ds.samples.push_back(random_sample(rng, ds.eye_rate, seconds));
    return ds;
}

/// Small model with random widths, hyperparameters and stored values, running stats included.
inline net::ModelParams random_model(phemonet::Rng& rng) {
    net::ModelConfig c = net::tiny_config();
    std::size_t others = 0;
    for (auto& s : c.specs) {
        s.samples_per_segment = 1 + rng.next() % 4;
        s.hidden = s.n * (1 + rng.next() % 3);
        if (s.modality != net::Modality::Gsr) others += s.hidden;
    }
    // GSR has n = 1, so it absorbs the slack that keeps every fusion width divisible by 4.
    for (auto& s : c.specs)
        if (s.modality == net::Modality::Gsr) s.hidden = 32 * (1 + others / 32) - others;
    c.dropout = rng.uniform(0.0, 0.9);
    c.bn_momentum = rng.uniform(0.01, 0.5);
    c.bn_eps = rng.uniform(1e-6, 1e-3);
    c.order = rng.bernoulli(0.5) ? net::BlockOrder::NormThenRelu : net::BlockOrder::ReluThenNorm;
    net::ModelParams model = net::build_model(c, rng.next());
    for (auto& g : net::parameter_groups(model))
        for (double& v : g.values) v = rng.normal(0.0, 1.0);
    return model;
}

/// Default model shapes scaled to `seconds`-long segments, for fast training tests.
inline net::ModelConfig short_config(std::size_t eye_rate, std::size_t seconds) {
    net::ModelConfig c = net::default_config(eye_rate);
    for (auto& s : c.specs) {
        const std::size_t rate = s.modality == net::Modality::Eye ? eye_rate : net::kSignalRate;
        s.samples_per_segment = rate * seconds;
    }
    return c;
}

}  // namespace fixture
