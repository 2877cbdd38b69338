#include "phemonet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "phemonet/errors.hpp"

namespace phemonet::training {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
    if (cfg.batch_size < 2) throw ConfigError("batch size must be at least 2 (batchnorm needs batch statistics)");
    if (!(cfg.max_lr > 0.0)) throw ConfigError("max_lr must be positive");
    if (!(cfg.div_factor > 0.0) || !(cfg.final_div_factor > 0.0)) throw ConfigError("dividing factors must be positive");
    if (!(cfg.pct_increase > 0.0 && cfg.pct_increase < 1.0)) throw ConfigError("pct_increase must lie in (0, 1)");
    if (!(cfg.momentum_min <= cfg.momentum_max)) throw ConfigError("momentum_min must not exceed momentum_max");
    if (!(cfg.momentum_min >= 0.0 && cfg.momentum_max < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
    if (!(cfg.adam_eps > 0.0)) throw ConfigError("adam eps must be positive");
}

std::size_t peak_step(std::size_t total_steps, const TrainConfig& cfg) {
    if (total_steps == 0) throw ConfigError("one_cycle: total_steps must be positive");
    const auto peak = static_cast<std::size_t>(std::llround(cfg.pct_increase * static_cast<double>(total_steps)));
    return std::min(peak, total_steps - 1);
}

ScheduleValue one_cycle(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
    if (step >= total_steps) {
        throw ConfigError("one_cycle: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + ")");
    }
    const double start_lr = cfg.max_lr / cfg.div_factor;
    const double end_lr = start_lr / cfg.final_div_factor;
    const std::size_t peak = peak_step(total_steps, cfg);

    if (step <= peak) {
        if (peak == 0) return {cfg.max_lr, cfg.momentum_min};
        const double t = static_cast<double>(step) / static_cast<double>(peak);
        return {start_lr + (cfg.max_lr - start_lr) * t, cfg.momentum_max + (cfg.momentum_min - cfg.momentum_max) * t};
    }
    const double t = static_cast<double>(step - peak) / static_cast<double>(total_steps - 1 - peak);
    return {cfg.max_lr + (end_lr - cfg.max_lr) * t, cfg.momentum_min + (cfg.momentum_max - cfg.momentum_min) * t};
}

LossResult cross_entropy(const Matrix& logits, std::span<const std::uint8_t> labels) {
    if (labels.size() != logits.rows()) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " + logits.shape_string());
    }
    const std::size_t batch = logits.rows();
    const std::size_t k = logits.cols();
    LossResult out{.loss = 0.0, .dlogits = Matrix(batch, k)};
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        auto z = logits.row(r);
        if (labels[r] >= k) throw ConfigError("cross_entropy: label " + std::to_string(labels[r]) + " out of range");
        for (double v : z)
            if (!std::isfinite(v)) throw NumericError("cross_entropy: non-finite logit");
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double lse = zmax + std::log(sum);
        out.loss += (lse - z[labels[r]]) * inv_batch;
        auto d = out.dlogits.row(r);
        for (std::size_t c = 0; c < k; ++c) d[c] = std::exp(z[c] - lse) * inv_batch;
        d[labels[r]] -= inv_batch;
    }
    return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               std::size_t step, double lr, double beta1, double beta2, double eps) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
        throw ShapeError("adam_step: state and gradient sizes must match the parameters");
    }
    if (step == 0) throw ConfigError("adam_step: step counter is 1-based");
    const double t = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

AdamState make_adam_state(const network::ModelParams& model) {
    AdamState s;
    for (const auto& g : network::parameter_groups(model)) {
        if (!g.trainable) continue;
        s.m.emplace_back(g.values.size(), 0.0);
        s.v.emplace_back(g.values.size(), 0.0);
    }
    return s;
}

void adam_update(network::ModelParams& model, const network::ModelParams& grads, AdamState& state, double lr,
                 double beta1, double beta2, double eps) {
    auto params = network::parameter_groups(model);
    const auto gs = network::parameter_groups(grads);
    if (params.size() != gs.size()) throw ShapeError("adam_update: gradient layout differs from the model");
    ++state.step;
    std::size_t slot = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        if (slot >= state.m.size()) throw ShapeError("adam_update: optimizer state does not match the model");
        adam_step(params[i].values, gs[i].values, state.m[slot], state.v[slot], state.step, lr, beta1, beta2, eps);
        ++slot;
    }
}

double MetricReport::micro_f1() const { return accuracy; }

double MetricReport::weighted_f1() const {
    double total = 0.0;
    double acc = 0.0;
    for (const auto& c : per_class) {
        acc += c.f1 * static_cast<double>(c.support);
        total += static_cast<double>(c.support);
    }
    return total > 0.0 ? acc / total : 0.0;
}

MetricReport report_from_confusion(const Confusion& confusion) {
    MetricReport r;
    r.confusion = confusion;
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t t = 0; t < data::kNumClasses; ++t)
        for (std::size_t p = 0; p < data::kNumClasses; ++p) {
            total += confusion[t][p];
            if (t == p) correct += confusion[t][p];
        }
    r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < data::kNumClasses; ++c) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t k = 0; k < data::kNumClasses; ++k) {
            predicted += confusion[k][c];
            actual += confusion[c][k];
        }
        const double tp = static_cast<double>(confusion[c][c]);
        auto& m = r.per_class[c];
        m.support = actual;
        m.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        m.recall = actual ? tp / static_cast<double>(actual) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        f1_sum += m.f1;
    }
    r.f1 = f1_sum / static_cast<double>(data::kNumClasses);
    return r;
}

MetricReport report_from_predictions(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
    if (truth.size() != predicted.size()) throw ShapeError("report: truth and prediction lengths differ");
    Confusion c{};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= data::kNumClasses || predicted[i] >= data::kNumClasses) {
            throw ConfigError("report: class index out of range");
        }
        ++c[truth[i]][predicted[i]];
    }
    return report_from_confusion(c);
}

std::vector<std::uint8_t> predict_classes(const Matrix& logits) {
    std::vector<std::uint8_t> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto z = logits.row(r);
        out[r] = static_cast<std::uint8_t>(std::max_element(z.begin(), z.end()) - z.begin());
    }
    return out;
}

MetricReport evaluate(const network::ModelParams& model, const std::vector<data::Sample>& samples, data::Task task,
                      std::size_t batch_size) {
    if (samples.empty()) throw DataError("evaluate: empty dataset");
    batch_size = std::max<std::size_t>(batch_size, 1);
    std::vector<std::uint8_t> truth;
    std::vector<std::uint8_t> predicted;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        const std::size_t end = std::min(samples.size(), start + batch_size);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const auto batch = data::to_model_batch(samples, idx);
        const auto preds = predict_classes(network::model_predict(model, batch.inputs));
        const auto& labels = batch.labels(task);
        truth.insert(truth.end(), labels.begin(), labels.end());
        predicted.insert(predicted.end(), preds.begin(), preds.end());
    }
    return report_from_predictions(truth, predicted);
}

bool EarlyStopping::update(double score) {
    if (!has_best_ || score > best_ + tol_) {
        best_ = score;
        has_best_ = true;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t start = 0; start < n; start += batch_size) ranges.emplace_back(start, std::min(n, start + batch_size));
    if (ranges.size() >= 2 && ranges.back().second - ranges.back().first == 1) {
        ranges[ranges.size() - 2].second = n;
        ranges.pop_back();
    }
    return ranges;
}

TrainResult train(network::ModelParams model, const std::vector<data::Sample>& train_set,
                  const std::vector<data::Sample>& val_set, const TrainConfig& cfg, Rng& rng) {
    validate(cfg);
    if (train_set.size() < 2) throw DataError("train: training split needs at least two samples");
    if (val_set.empty()) throw DataError("train: empty validation split");
    data::validate_against(train_set, model.config);
    data::validate_against(val_set, model.config);

    const auto ranges = batch_ranges(train_set.size(), cfg.batch_size);
    const std::size_t total_steps = cfg.epochs * ranges.size();

    AdamState adam = make_adam_state(model);
    EarlyStopping stopper(cfg.patience, cfg.improvement_tol);
    TrainResult result{.best = model, .history = {}, .best_epoch = 0, .best_report = {}};

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        double lr = 0.0;
        for (const auto& [begin, end] : ranges) {
            const std::span<const std::size_t> idx(order.data() + begin, end - begin);
            const auto batch = data::to_model_batch(train_set, idx);
            network::ForwardCache cache;
            const Matrix logits = network::model_forward(model, batch.inputs, network::Mode::Train, rng, &cache);
            const auto loss = cross_entropy(logits, batch.labels(cfg.task));
            const auto grads = network::model_backward(model, cache, loss.dlogits);
            const auto sched = one_cycle(step++, total_steps, cfg);
            adam_update(model, grads, adam, sched.lr, sched.momentum, cfg.beta2, cfg.adam_eps);
            loss_sum += loss.loss * static_cast<double>(end - begin);
            lr = sched.lr;
        }

        const MetricReport report = evaluate(model, val_set, cfg.task);
        result.history.push_back(EpochRecord{.epoch = epoch,
                                             .train_loss = loss_sum / static_cast<double>(train_set.size()),
                                             .lr = lr,
                                             .val_accuracy = report.accuracy,
                                             .val_f1 = report.f1});
        if (stopper.update(report.f1)) {
            result.best = model;
            result.best_epoch = epoch;
            result.best_report = report;
        }
        if (stopper.should_stop()) break;
    }
    return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_loss,lr,val_accuracy,val_f1\n";
    for (const auto& h : history) {
        out += std::to_string(h.epoch) + "," + sci(h.train_loss) + "," + sci(h.lr) + "," + fixed(h.val_accuracy, 6) +
               "," + fixed(h.val_f1, 6) + "\n";
    }
    return out;
}

std::string format_report(const MetricReport& report, data::Task task) {
    std::ostringstream os;
    os << "task: " << data::task_name(task) << "\n";
    os << "accuracy: " << fixed(100.0 * report.accuracy, 2) << "\n";
    os << "f1: " << fixed(report.f1, 3) << "\n";
    os << "class,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < data::kNumClasses; ++c) {
        const auto& m = report.per_class[c];
        os << data::class_name(task, c) << "," << fixed(m.precision, 3) << "," << fixed(m.recall, 3) << ","
           << fixed(m.f1, 3) << "," << m.support << "\n";
    }
    os << "confusion (rows true, cols predicted):\n";
    for (const auto& row : report.confusion) {
        for (std::size_t p = 0; p < row.size(); ++p) os << (p ? " " : "") << row[p];
        os << "\n";
    }
    return os.str();
}

}  // namespace phemonet::training
