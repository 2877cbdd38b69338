#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "phemonet/network.hpp"
#include "phemonet/sigproc.hpp"

namespace phemonet::data {

/// Arousal classes: calm / medium aroused / excited. Valence: unpleasant / neutral / pleasant.
enum class Task { Arousal, Valence };

inline constexpr std::size_t kNumClasses = 3;

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
std::string_view class_name(Task task, std::size_t class_index);

/// Channel count each modality must carry (eye 4, gsr 1, eeg 10, ecg 3).
std::size_t expected_channels(network::Modality m);

/// One 10 s multimodal example. segments is indexed by modality slot.
struct Sample {
    std::array<sigproc::TimeSeries, network::kModalityCount> segments;
    std::uint8_t arousal = 0;
    std::uint8_t valence = 0;
    std::uint32_t subject_id = 0;
    bool augmented = false;

    std::uint8_t label(Task task) const noexcept { return task == Task::Arousal ? arousal : valence; }
    const sigproc::TimeSeries& segment(network::Modality m) const { return segments[network::slot(m)]; }
};

struct Dataset {
    std::uint16_t eye_rate = static_cast<std::uint16_t>(network::kDefaultEyeRate);
    std::vector<Sample> samples;
};

inline constexpr std::uint16_t kDatasetVersion = 1;

/// "PHDS" layout, little-endian:
///   magic "PHDS", u16 version, u32 sample count, u16 eye_rate
///   per sample: u32 subject_id, u8 arousal, u8 valence, u8 augmented,
///     per modality (eye, gsr, eeg, ecg): u8 channels, u32 samples, f32 data channel-major
/// Values are stored as f32 and widened to f64 on read.
std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Unprocessed recording at native rates with full channel sets.
struct RawRecording {
    std::uint32_t subject_id = 0;
    std::uint8_t arousal = 0;
    std::uint8_t valence = 0;
    sigproc::TimeSeries eye_left;
    sigproc::TimeSeries eye_right;
    sigproc::TimeSeries gsr;
    sigproc::TimeSeries eeg;
    sigproc::TimeSeries ecg;
};

inline constexpr std::uint16_t kRawVersion = 1;

/// "PHDR" layout, little-endian:
///   magic "PHDR", u16 version, u32 recording count
///   per recording: u32 subject_id, u8 arousal, u8 valence, then five streams
///     (eye_left, eye_right, gsr, eeg, ecg), each: u16 sample rate, u8 channels,
///     per channel u8 name length + name bytes, u32 samples, f32 data channel-major
std::vector<std::uint8_t> encode_raw(const std::vector<RawRecording>& recordings);
std::vector<RawRecording> decode_raw(const std::vector<std::uint8_t>& bytes);
void write_raw(const std::vector<RawRecording>& recordings, const std::filesystem::path& path);
std::vector<RawRecording> read_raw(const std::filesystem::path& path);

/// Runs each modality's preprocessing chain and cuts 10 s segments; one Sample per segment
/// (as many as the shortest modality allows).
std::vector<Sample> preprocess_recording(const RawRecording& recording,
                                         double segment_seconds = network::kSegmentSeconds);

struct SynthOptions {
    std::size_t eye_rate = network::kDefaultEyeRate;
    double seconds = network::kSegmentSeconds;
    std::size_t subjects = 27;
    double noise_level = 1.0;
};

/// 3 * n_per_class processed samples. Arousal class a places a sinusoid at (4 + 3a) Hz with
/// amplitude growing in a; valence class v a second one at (5.5 + 3v) Hz; both ride on 1/f-like
/// noise. Arousal and valence are each exactly balanced.
Dataset generate_synthetic(std::size_t n_per_class, std::uint64_t seed, const SynthOptions& options = {});

/// Raw 30 s recordings (256 Hz EEG with 32 named electrodes, ECG 3 leads, GSR with an offset,
/// two eye streams) carrying the same class signatures.
std::vector<RawRecording> generate_synthetic_raw(std::size_t n_per_class, std::uint64_t seed,
                                                 std::size_t eye_rate = network::kDefaultEyeRate,
                                                 double seconds = 30.0);

enum class SplitMode { Stratified, Subject };

std::string_view split_mode_name(SplitMode mode);
SplitMode parse_split_mode(std::string_view name);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class, round(train_fraction * count) samples go to train (at least one on each side).
/// Subject mode assigns whole subjects instead. Throws DataError when a class (or, for
/// subject mode, the subject list) has fewer than two members.
Split stratified_split(const std::vector<Sample>& samples, Task task, double train_fraction, std::uint64_t seed,
                       SplitMode mode = SplitMode::Stratified);

std::vector<Sample> gather(const std::vector<Sample>& samples, std::span<const std::size_t> indices);

/// Original samples followed by two augmented variants (noise, scale) of each.
std::vector<Sample> augment_samples(const std::vector<Sample>& samples, Rng& rng,
                                    const sigproc::AugmentOptions& options = {});

struct ModelBatch {
    network::ModalityBatch inputs;
    std::vector<std::uint8_t> arousal;
    std::vector<std::uint8_t> valence;

    const std::vector<std::uint8_t>& labels(Task task) const { return task == Task::Arousal ? arousal : valence; }
};

/// Flattens each modality channel-major into one row per sample.
ModelBatch to_model_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices);

/// Checks that every sample's flattened widths match the model specs (and hence are
/// divisible by each modality's n). Throws ShapeError naming the sample and modality.
void validate_against(const std::vector<Sample>& samples, const network::ModelConfig& config);

/// Model specs sized for a dataset's eye rate.
network::ModelConfig config_for(const Dataset& dataset);

std::array<std::size_t, kNumClasses> class_counts(const std::vector<Sample>& samples, Task task);

}  // namespace phemonet::data
