#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phemonet/data.hpp"
#include "phemonet/linalg.hpp"
#include "phemonet/network.hpp"
#include "phemonet/rng.hpp"

namespace phemonet::training {

enum class Anneal { Linear };

/// Optimizer and schedule settings. Defaults: 50 epochs, patience
/// 10, one-cycle with peak 7.96e-6, both dividing factors 10, 42.5% warm-up, momentum
/// 0.7985 -> 0.7403 -> 0.7985, linear annealing.
struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t patience = 10;
    double max_lr = 7.96e-6;
    double div_factor = 10.0;
    double final_div_factor = 10.0;
    double pct_increase = 0.425;
    double momentum_max = 0.7985;
    double momentum_min = 0.7403;
    Anneal anneal = Anneal::Linear;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double improvement_tol = 1e-6;
    data::Task task = data::Task::Valence;
};

/// Throws ConfigError on out-of-range values.
void validate(const TrainConfig& cfg);

struct ScheduleValue {
    double lr;
    double momentum;
};

/// Index of the step at which the learning rate peaks: round(pct_increase * total).
std::size_t peak_step(std::size_t total_steps, const TrainConfig& cfg);

/// One-cycle schedule. Up to the peak step the rate rises linearly from max_lr / div_factor
/// to max_lr while momentum falls from momentum_max to momentum_min; afterwards the rate
/// falls linearly to max_lr / (div_factor * final_div_factor) at the last step and momentum
/// climbs back. Throws ConfigError when step >= total_steps.
ScheduleValue one_cycle(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

struct LossResult {
    double loss;
    Matrix dlogits;
};

/// Mean softmax cross-entropy with gradient (softmax - onehot) / batch.
LossResult cross_entropy(const Matrix& logits, std::span<const std::uint8_t> labels);

/// In-place Adam update of one parameter array. step is 1-based; beta1 may change between
/// calls (it follows the momentum schedule) and bias correction uses the current beta1.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               std::size_t step, double lr, double beta1, double beta2, double eps);

/// First and second moments for every trainable group of a model.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

AdamState make_adam_state(const network::ModelParams& model);

/// Applies adam_step to every trainable group; grads must have the model's shape.
void adam_update(network::ModelParams& model, const network::ModelParams& grads, AdamState& state, double lr,
                 double beta1, double beta2, double eps);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

using Confusion = std::array<std::array<std::size_t, data::kNumClasses>, data::kNumClasses>;

/// confusion[true][predicted]. f1 is the macro average.
struct MetricReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::array<ClassMetrics, data::kNumClasses> per_class{};
    Confusion confusion{};

    double micro_f1() const;
    double weighted_f1() const;
};

MetricReport report_from_confusion(const Confusion& confusion);
MetricReport report_from_predictions(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

/// Row-wise argmax.
std::vector<std::uint8_t> predict_classes(const Matrix& logits);

/// Eval-mode predictions over the dataset in chunks of batch_size rows.
MetricReport evaluate(const network::ModelParams& model, const std::vector<data::Sample>& samples, data::Task task,
                      std::size_t batch_size = 64);

/// Tracks the best score; should_stop() once `patience` consecutive updates fail to beat it
/// by more than tol.
class EarlyStopping {
public:
    EarlyStopping(std::size_t patience, double tol) : patience_(patience), tol_(tol) {}

    /// Returns true if score is a new best.
    bool update(double score);
    bool should_stop() const noexcept { return stale_ >= patience_; }
    double best() const noexcept { return best_; }
    std::size_t stale_epochs() const noexcept { return stale_; }

private:
    std::size_t patience_;
    double tol_;
    double best_ = -1.0;
    bool has_best_ = false;
    std::size_t stale_ = 0;
};

struct EpochRecord {
    std::size_t epoch;
    double train_loss;
    double lr;
    double val_accuracy;
    double val_f1;
};

struct TrainResult {
    network::ModelParams best;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    MetricReport best_report;
};

/// Batch boundaries for n samples: chunks of batch_size, a trailing chunk of one folded into
/// the previous chunk so that train-mode batchnorm always sees at least two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size);

/// Mini-batch training with per-step one-cycle scheduling, per-epoch validation macro-F1,
/// best-F1 checkpointing and early stopping. The returned model is the best checkpoint.
TrainResult train(network::ModelParams model, const std::vector<data::Sample>& train_set,
                  const std::vector<data::Sample>& val_set, const TrainConfig& cfg, Rng& rng);

/// "epoch,train_loss,lr,val_accuracy,val_f1" followed by one line per epoch.
std::string history_csv(const std::vector<EpochRecord>& history);

/// Human-readable report: accuracy in percent with two decimals, F1 with three, per-class
/// table and confusion matrix.
std::string format_report(const MetricReport& report, data::Task task);

}  // namespace phemonet::training
