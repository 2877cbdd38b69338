#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phemonet/linalg.hpp"
#include "phemonet/phm.hpp"
#include "phemonet/rng.hpp"

namespace phemonet::network {

/// Input modalities in concatenation order. The numeric value is the slot index everywhere
/// (encoder array, batch array, file layout).
enum class Modality : std::uint8_t { Eye = 0, Gsr = 1, Eeg = 2, Ecg = 3 };

inline constexpr std::size_t kModalityCount = 4;
inline constexpr std::array<Modality, kModalityCount> kModalityOrder = {Modality::Eye, Modality::Gsr, Modality::Eeg,
                                                                         Modality::Ecg};

std::string_view modality_name(Modality m);
/// Throws ConfigError for unknown names.
Modality parse_modality(std::string_view name);

constexpr std::size_t slot(Modality m) noexcept { return static_cast<std::size_t>(m); }

struct ModalitySpec {
    Modality modality = Modality::Eye;
    std::size_t n = 1;
    std::size_t channels = 1;
    std::size_t samples_per_segment = 1;
    std::size_t hidden = 1;

    /// Flattened channel-major input width.
    std::size_t input_width() const noexcept { return channels * samples_per_segment; }
};

inline constexpr std::size_t kDefaultEyeRate = 60;
inline constexpr std::size_t kSignalRate = 128;
inline constexpr std::size_t kSegmentSeconds = 10;

/// Encoders at their natural hypercomplex dimension: eye n=4 (128 hidden), GSR n=1 (131),
/// EEG n=10 (1020), ECG n=3 (513), for 10 s segments.
std::vector<ModalitySpec> default_specs(std::size_t eye_rate = kDefaultEyeRate);

/// Reduced widths used by gradient checks: hidden 8/4/40/12, fusion 64 -> 32 -> 16 -> 8.
std::vector<ModalitySpec> tiny_specs();

enum class Mode { Train, Eval };

/// Order of the two operations following each PHM layer.
enum class BlockOrder { NormThenRelu, ReluThenNorm };

std::string_view block_order_name(BlockOrder order);
BlockOrder parse_block_order(std::string_view name);

struct BatchNormState {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    std::size_t width() const noexcept { return gamma.size(); }
};

BatchNormState make_batchnorm(std::size_t width, double momentum = 0.1, double eps = 1e-5);

struct BatchNormCache {
    Mode mode = Mode::Eval;
    Matrix xhat;
    std::vector<double> inv_std;
};

struct BatchNormGradients {
    std::vector<double> dgamma;
    std::vector<double> dbeta;
    Matrix dx;
};

/// Train: normalizes with batch statistics (biased variance) and blends them into the running
/// statistics as running <- (1 - momentum) running + momentum batch. Requires batch >= 2.
/// Eval: uses the running statistics and leaves the state untouched.
Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache = nullptr);

/// Eval-mode normalization on a const state.
Matrix batchnorm_infer(const BatchNormState& state, const Matrix& x);

BatchNormGradients batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache,
                                      const Matrix& upstream);

/// Plain affine layer y = x W^T + b with W stored out x in.
struct DenseLayer {
    Matrix W;
    std::vector<double> b;
};

DenseLayer init_dense(std::size_t d_in, std::size_t d_out, std::uint64_t seed);
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

/// One PHM layer with its normalization.
struct Block {
    phm::PhmLayer phm;
    BatchNormState bn;
};

struct ModelConfig {
    std::vector<ModalitySpec> specs;
    std::size_t fusion_n = 4;
    std::size_t fusion_layers = 3;
    std::size_t num_classes = 3;
    double dropout = 0.5;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
    BlockOrder order = BlockOrder::NormThenRelu;
    std::string init_scheme = std::string(phm::kGlorotBlockScheme);

    /// Sum of encoder hidden widths, i.e. the first fusion input width.
    std::size_t fusion_width() const;
    /// Spec for the given modality; ConfigError if absent.
    const ModalitySpec& spec(Modality m) const;
};

ModelConfig default_config(std::size_t eye_rate = kDefaultEyeRate);
ModelConfig tiny_config();

/// Validates specs (each modality exactly once, in any order) and widths. Specs are stored
/// in slot order afterwards. Throws ConfigError naming the offending modality or layer.
void validate_config(ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    std::array<Block, kModalityCount> encoders;
    std::vector<Block> fusion;
    DenseLayer classifier;
};

ModelParams build_model(const std::vector<ModalitySpec>& specs, std::uint64_t seed);
ModelParams build_model(ModelConfig config, std::uint64_t seed);

/// One input matrix per modality, indexed by slot, each batch x (channels * samples).
using ModalityBatch = std::array<Matrix, kModalityCount>;

struct BlockCache {
    Matrix input;
    Matrix relu_input;
    BatchNormCache bn;
    bool has_dropout = false;
    Matrix dropout_mask;
};

struct ForwardCache {
    std::array<BlockCache, kModalityCount> encoders;
    std::vector<BlockCache> fusion;
    Matrix classifier_input;
};

/// ReLU(batchnorm(PHM(x))) (or the configured order) for one modality; batch x hidden.
Matrix encoder_forward(ModelParams& model, Modality modality, const Matrix& x, Mode mode,
                       BlockCache* cache = nullptr);

/// Concatenates embeddings (eye, gsr, eeg, ecg), runs the fusion blocks with dropout in train
/// mode, and returns batch x num_classes logits.
Matrix fusion_forward(ModelParams& model, const ModalityBatch& embeddings, Mode mode, Rng& rng,
                      ForwardCache* cache = nullptr);

/// Encoders then fusion.
Matrix model_forward(ModelParams& model, const ModalityBatch& batch, Mode mode, Rng& rng,
                     ForwardCache* cache = nullptr);

/// Eval-mode forward on a const model.
Matrix model_predict(const ModelParams& model, const ModalityBatch& batch);

/// Gradients of the loss with respect to every parameter, given dL/dlogits and the cache of
/// the forward pass that produced the logits. The result has the model's shape; running
/// statistics in it are zero.
ModelParams model_backward(const ModelParams& model, const ForwardCache& cache, const Matrix& dlogits);

/// A named contiguous run of model storage.
struct ParamGroup {
    std::string name;
    std::span<double> values;
    bool trainable = true;
};

struct ConstParamGroup {
    std::string name;
    std::span<const double> values;
    bool trainable = true;
};

/// Every stored array in declaration order: per encoder then fusion block, the A blocks,
/// F blocks, bias, then batchnorm gamma, beta, running mean, running variance; the
/// classifier weight and bias last.
std::vector<ParamGroup> parameter_groups(ModelParams& model);
std::vector<ConstParamGroup> parameter_groups(const ModelParams& model);

/// Number of stored doubles (trainable parameters plus running statistics).
std::size_t element_count(const ModelParams& model);
std::size_t trainable_count(const ModelParams& model);

/// Closed-form element count from the configuration alone: per PHM layer param_count plus
/// four batchnorm vectors, plus the classifier.
std::size_t expected_element_count(const ModelConfig& config);

}  // namespace phemonet::network
