#include "phemonet/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <tuple>

#include "phemonet/linalg.hpp"
#include "phemonet/network.hpp"
#include "phemonet/phm.hpp"
#include "phemonet/rng.hpp"
#include "phemonet/training.hpp"

namespace phemonet::gradcheck {

namespace {

constexpr double kCorruption = 1.1;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal(0.0, 1.0);
    return m;
}

void add_row(Report& report, const std::string& layer, const std::string& group, std::span<const double> analytic,
             std::span<const double> numeric, const Options& options) {
    std::vector<double> a(analytic.begin(), analytic.end());
    if (options.corrupt_backward)
        for (double& v : a) v *= kCorruption;
    const double err = max_relative_error(a, numeric, options.floor);
    report.groups.push_back({layer + "." + group, a.size(), err});
    auto it = std::find_if(report.layers.begin(), report.layers.end(), [&](const Row& r) { return r.name == layer; });
    if (it == report.layers.end()) {
        report.layers.push_back({layer, a.size(), err});
    } else {
        it->count += a.size();
        it->max_rel_error = std::max(it->max_rel_error, err);
    }
}

std::vector<double> flatten(const std::vector<Matrix>& ms) {
    std::vector<double> out;
    for (const auto& m : ms) out.insert(out.end(), m.data().begin(), m.data().end());
    return out;
}

void unflatten(std::span<const double> flat, std::vector<Matrix>& ms) {
    std::size_t k = 0;
    for (auto& m : ms)
        for (double& v : m.data()) v = flat[k++];
}

}  // namespace

double Report::max_rel_error() const {
    double m = 0.0;
    for (const auto& r : groups) m = std::max(m, r.max_rel_error);
    return m;
}

Report phm_suite(const Options& options) {
    using Shape = std::tuple<std::size_t, std::size_t, std::size_t>;
    constexpr std::array<Shape, 5> shapes = {Shape{1, 4, 2}, Shape{2, 4, 6}, Shape{3, 6, 9}, Shape{4, 8, 8},
                                             Shape{10, 20, 10}};
    Report report;
    Rng rng(options.seed);
    for (const auto& [n, d_in, d_out] : shapes) {
        phm::PhmLayer layer = phm::init(n, d_in, d_out, rng.next());
        for (double& b : layer.b) b = rng.normal(0.0, 1.0);
        const Matrix x = random_matrix(options.batch, d_in, rng);
        const Matrix upstream = random_matrix(options.batch, d_out, rng);
        const auto g = phm::backward(layer, x, upstream);
        const std::string name = "phm(n=" + std::to_string(n) + "," + std::to_string(d_in) + "->" + std::to_string(d_out) + ")";

        auto loss_with = [&](const phm::PhmLayer& l, const Matrix& input) {
            return frobenius_dot(upstream, phm::forward(l, input));
        };

        {
            phm::PhmLayer probe = layer;
            const auto flat = flatten(layer.A);
            const auto num = finite_diff_grad(
                [&](std::span<const double> p) {
                    unflatten(p, probe.A);
                    return loss_with(probe, x);
                },
                flat, options.eps);
            add_row(report, name, "A", flatten(g.dA), num, options);
        }
        {
            phm::PhmLayer probe = layer;
            const auto flat = flatten(layer.F);
            const auto num = finite_diff_grad(
                [&](std::span<const double> p) {
                    unflatten(p, probe.F);
                    return loss_with(probe, x);
                },
                flat, options.eps);
            add_row(report, name, "F", flatten(g.dF), num, options);
        }
        {
            phm::PhmLayer probe = layer;
            const auto num = finite_diff_grad(
                [&](std::span<const double> p) {
                    probe.b.assign(p.begin(), p.end());
                    return loss_with(probe, x);
                },
                layer.b, options.eps);
            add_row(report, name, "bias", g.db, num, options);
        }
        {
            const auto num = finite_diff_grad(
                [&](std::span<const double> p) {
                    return loss_with(layer, Matrix(x.rows(), x.cols(), std::vector<double>(p.begin(), p.end())));
                },
                x.data(), options.eps);
            add_row(report, name, "input", g.dx.data(), num, options);
        }
    }
    return report;
}

Report network_suite(const Options& options) {
    Rng rng(options.seed);
    network::ModelParams model = network::build_model(network::tiny_config(), rng.next());
    // Non-trivial biases and normalization parameters so every group carries signal.
    for (auto& g : network::parameter_groups(model)) {
        if (!g.trainable) continue;
        const bool bn = g.name.find(".bn.") != std::string::npos;
        const bool bias = g.name.ends_with("bias");
        if (!bn && !bias) continue;
        for (double& v : g.values) v = (g.name.ends_with("gamma") ? 1.0 : 0.0) + 0.3 * rng.normal(0.0, 1.0);
    }

    network::ModalityBatch batch;
    for (network::Modality m : network::kModalityOrder) {
        batch[network::slot(m)] = random_matrix(options.batch, model.config.spec(m).input_width(), rng);
    }
    std::vector<std::uint8_t> labels(options.batch);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(i % 3);
    const std::uint64_t dropout_seed = rng.next();

    auto loss_of = [&](network::ModelParams& m, network::ForwardCache* cache) {
        Rng dropout_rng(dropout_seed);
        const Matrix logits = network::model_forward(m, batch, network::Mode::Train, dropout_rng, cache);
        return training::cross_entropy(logits, labels);
    };

    network::ModelParams work = model;
    network::ForwardCache cache;
    const auto loss = loss_of(work, &cache);
    const network::ModelParams grads = network::model_backward(model, cache, loss.dlogits);

    Report report;
    auto groups = network::parameter_groups(model);
    const auto grad_groups = network::parameter_groups(grads);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (!groups[gi].trainable) continue;
        const std::string& full = groups[gi].name;
        const auto dot = full.find('.');
        const std::string layer = full.substr(0, dot);
        const std::string group = full.substr(dot + 1);
        const std::vector<double> base(groups[gi].values.begin(), groups[gi].values.end());

        const auto num = finite_diff_grad(
            [&](std::span<const double> p) {
                network::ModelParams probe = model;
                auto target = network::parameter_groups(probe)[gi].values;
                std::copy(p.begin(), p.end(), target.begin());
                return loss_of(probe, nullptr).loss;
            },
            base, options.eps);
        add_row(report, layer, group, grad_groups[gi].values, num, options);
    }
    return report;
}

}  // namespace phemonet::gradcheck
