#include "phemonet/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "binary_io.hpp"
#include "phemonet/errors.hpp"

namespace phemonet::data {

using network::Modality;
using network::kModalityOrder;
using network::slot;

namespace {

constexpr std::string_view kDatasetMagic = "PHDS";
constexpr std::string_view kRawMagic = "PHDR";
constexpr double kRawRate = 256.0;

const std::vector<std::string>& canonical_names(Modality m) {
    static const std::vector<std::string> eye(sigproc::kEyeChannels.begin(), sigproc::kEyeChannels.end());
    static const std::vector<std::string> gsr = {"GSR"};
    static const std::vector<std::string> eeg(sigproc::kEegChannels.begin(), sigproc::kEegChannels.end());
    static const std::vector<std::string> ecg = {"ECG1", "ECG2", "ECG3"};
    switch (m) {
        case Modality::Eye: return eye;
        case Modality::Gsr: return gsr;
        case Modality::Eeg: return eeg;
        case Modality::Ecg: return ecg;
    }
    return eye;
}

// EEG montage for synthetic raw recordings: the ten retained electrodes interleaved with
// 22 others.
const std::vector<std::string>& raw_eeg_montage() {
    static const std::vector<std::string> names = {
        "Fp1", "Fp2", "AF3", "F7", "F3", "Fz", "F4", "F8", "AF4", "FC5", "FC1", "F5", "FC2", "FC6", "F6", "T7",
        "C3",  "Cz",  "C4",  "T8", "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "P8", "PO3", "PO4", "Oz"};
    return names;
}

std::string sample_context(std::size_t index, Modality m) {
    return "sample " + std::to_string(index) + " modality " + std::string(network::modality_name(m));
}

void write_matrix_f32(detail::ByteWriter& w, const Matrix& m) {
    for (double v : m.data()) w.f32(static_cast<float>(v));
}

Matrix read_matrix_f32(detail::ByteReader& r, std::size_t rows, std::size_t cols, const char* what) {
    r.need_elements(rows * cols, sizeof(float), what);
    std::vector<double> d(rows * cols);
    for (double& v : d) v = static_cast<double>(r.f32(what));
    return Matrix(rows, cols, std::move(d));
}

std::uint8_t read_label(detail::ByteReader& r, const char* what) {
    const std::size_t at = r.offset();
    const auto v = r.u8(what);
    if (v >= kNumClasses) throw FormatError(std::string(what) + " " + std::to_string(v) + " outside {0,1,2}", at);
    return v;
}

// 1/f-like noise: an AR(1) random walk blended with white noise, unit variance overall.
void add_colored_noise(std::span<double> x, Rng& rng, double level) {
    if (level <= 0.0) return;
    constexpr double kPole = 0.95;
    const double ar_scale = std::sqrt(1.0 - kPole * kPole);
    double state = rng.normal(0.0, 1.0);
    for (double& v : x) {
        state = kPole * state + ar_scale * rng.normal(0.0, 1.0);
        v += level * (0.8 * state + 0.6 * rng.normal(0.0, 1.0));
    }
}

struct Signature {
    std::size_t arousal;
    std::size_t valence;
    double phase;
};

// Class signature plus noise for one channel.
void fill_channel(std::span<double> x, double rate, const Signature& sig, std::size_t channel, Rng& rng,
                  double noise_level) {
    const double fa = 4.0 + 3.0 * static_cast<double>(sig.arousal);
    const double fv = 5.5 + 3.0 * static_cast<double>(sig.valence);
    const double amp_a = 0.6 + 0.3 * static_cast<double>(sig.arousal);
    const double amp_v = 0.6 + 0.3 * static_cast<double>(sig.valence);
    const double ch_phase = 0.37 * static_cast<double>(channel);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] = amp_a * std::sin(two_pi * fa * t + sig.phase + ch_phase) +
               amp_v * std::sin(two_pi * fv * t + 0.5 * sig.phase - ch_phase);
    }
    add_colored_noise(x, rng, noise_level);
}

sigproc::TimeSeries synth_series(double rate, std::vector<std::string> names, std::size_t len, const Signature& sig,
                                 Rng& rng, double noise_level) {
    Matrix m(names.size(), len);
    for (std::size_t c = 0; c < names.size(); ++c) fill_channel(m.row(c), rate, sig, c, rng, noise_level);
    return sigproc::make_series(rate, std::move(names), std::move(m));
}

// Label pair for the j-th sample of arousal class a; keeps valence exactly balanced.
Signature signature_for(std::size_t arousal, std::size_t j, Rng& rng) {
    return Signature{.arousal = arousal, .valence = (arousal + j) % kNumClasses, .phase = rng.uniform(-0.25, 0.25) *
                                                                                           std::numbers::pi};
}

void write_series_raw(detail::ByteWriter& w, const sigproc::TimeSeries& s) {
    w.u16(static_cast<std::uint16_t>(std::llround(s.sample_rate)));
    w.u8(static_cast<std::uint8_t>(s.channels()));
    for (const auto& name : s.names) {
        w.u8(static_cast<std::uint8_t>(name.size()));
        w.bytes(name);
    }
    w.u32(static_cast<std::uint32_t>(s.samples()));
    write_matrix_f32(w, s.data);
}

sigproc::TimeSeries read_series_raw(detail::ByteReader& r, const char* what) {
    const std::size_t at = r.offset();
    const auto rate = r.u16("sample rate");
    const auto channels = r.u8("channel count");
    if (rate == 0 || channels == 0) throw FormatError(std::string(what) + ": zero sample rate or channel count", at);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c) names.push_back(r.string(r.u8("name length"), "channel name"));
    const std::size_t len_at = r.offset();
    const auto len = r.u32("sample count");
    if (len == 0) throw FormatError(std::string(what) + ": empty stream", len_at);
    Matrix m = read_matrix_f32(r, channels, len, what);
    return sigproc::make_series(rate, std::move(names), std::move(m));
}

}  // namespace

std::string_view task_name(Task task) { return task == Task::Arousal ? "arousal" : "valence"; }

Task parse_task(std::string_view name) {
    if (name == "arousal") return Task::Arousal;
    if (name == "valence") return Task::Valence;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected arousal or valence)");
}

std::string_view class_name(Task task, std::size_t class_index) {
    static constexpr std::array<std::string_view, 3> arousal = {"calm", "medium aroused", "excited"};
    static constexpr std::array<std::string_view, 3> valence = {"unpleasant", "neutral", "pleasant"};
    if (class_index >= kNumClasses) throw ConfigError("class index out of range");
    return task == Task::Arousal ? arousal[class_index] : valence[class_index];
}

std::size_t expected_channels(Modality m) { return canonical_names(m).size(); }

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset) {
    detail::ByteWriter w;
    w.bytes(kDatasetMagic);
    w.u16(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(dataset.samples.size()));
    w.u16(dataset.eye_rate);
    for (const auto& s : dataset.samples) {
        w.u32(s.subject_id);
        w.u8(s.arousal);
        w.u8(s.valence);
        w.u8(s.augmented ? 1 : 0);
        for (Modality m : kModalityOrder) {
            const auto& seg = s.segment(m);
            w.u8(static_cast<std::uint8_t>(seg.channels()));
            w.u32(static_cast<std::uint32_t>(seg.samples()));
            write_matrix_f32(w, seg.data);
        }
    }
    return std::move(w).take();
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    r.expect_magic(kDatasetMagic, "dataset");
    const std::size_t version_at = r.offset();
    const auto version = r.u16("version");
    if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version), version_at);
    const auto count = r.u32("sample count");
    const std::size_t rate_at = r.offset();
    Dataset ds;
    ds.eye_rate = r.u16("eye rate");
    if (ds.eye_rate == 0) throw FormatError("eye rate must be positive", rate_at);

    ds.samples.reserve(std::min<std::size_t>(count, r.remaining() / 16 + 1));
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.subject_id = r.u32("subject id");
        s.arousal = read_label(r, "arousal label");
        s.valence = read_label(r, "valence label");
        const std::size_t aug_at = r.offset();
        const auto aug = r.u8("augmented flag");
        if (aug > 1) throw FormatError("augmented flag must be 0 or 1", aug_at);
        s.augmented = aug == 1;
        for (Modality m : kModalityOrder) {
            const std::size_t at = r.offset();
            const auto channels = r.u8("channel count");
            if (channels != expected_channels(m)) {
                throw FormatError(sample_context(i, m) + ": expected " + std::to_string(expected_channels(m)) +
                                      " channels, found " + std::to_string(channels),
                                  at);
            }
            const std::size_t len_at = r.offset();
            const auto len = r.u32("sample count");
            if (len == 0) throw FormatError(sample_context(i, m) + ": empty segment", len_at);
            const double rate = m == Modality::Eye ? ds.eye_rate : static_cast<double>(network::kSignalRate);
            s.segments[slot(m)] = sigproc::TimeSeries{
                .sample_rate = rate, .names = canonical_names(m), .data = read_matrix_f32(r, channels, len, "signal data")};
        }
        ds.samples.push_back(std::move(s));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after the last sample", r.offset());
    return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    detail::write_file(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

std::vector<std::uint8_t> encode_raw(const std::vector<RawRecording>& recordings) {
    detail::ByteWriter w;
    w.bytes(kRawMagic);
    w.u16(kRawVersion);
    w.u32(static_cast<std::uint32_t>(recordings.size()));
    for (const auto& rec : recordings) {
        w.u32(rec.subject_id);
        w.u8(rec.arousal);
        w.u8(rec.valence);
        for (const auto* s : {&rec.eye_left, &rec.eye_right, &rec.gsr, &rec.eeg, &rec.ecg}) write_series_raw(w, *s);
    }
    return std::move(w).take();
}

std::vector<RawRecording> decode_raw(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    r.expect_magic(kRawMagic, "raw recordings");
    const std::size_t version_at = r.offset();
    const auto version = r.u16("version");
    if (version != kRawVersion) throw FormatError("unsupported raw version " + std::to_string(version), version_at);
    const auto count = r.u32("recording count");
    std::vector<RawRecording> out;
    for (std::size_t i = 0; i < count; ++i) {
        RawRecording rec;
        rec.subject_id = r.u32("subject id");
        rec.arousal = read_label(r, "arousal label");
        rec.valence = read_label(r, "valence label");
        rec.eye_left = read_series_raw(r, "left eye stream");
        rec.eye_right = read_series_raw(r, "right eye stream");
        rec.gsr = read_series_raw(r, "GSR stream");
        rec.eeg = read_series_raw(r, "EEG stream");
        rec.ecg = read_series_raw(r, "ECG stream");
        out.push_back(std::move(rec));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after the last recording", r.offset());
    return out;
}

void write_raw(const std::vector<RawRecording>& recordings, const std::filesystem::path& path) {
    detail::write_file(path, encode_raw(recordings));
}

std::vector<RawRecording> read_raw(const std::filesystem::path& path) { return decode_raw(detail::read_file(path)); }

std::vector<Sample> preprocess_recording(const RawRecording& recording, double segment_seconds) {
    if (recording.gsr.channels() != 1) throw DataError("GSR stream must have one channel");
    if (recording.ecg.channels() != expected_channels(Modality::Ecg)) throw DataError("ECG stream must have three leads");

    std::array<sigproc::TimeSeries, network::kModalityCount> processed;
    processed[slot(Modality::Eye)] = sigproc::average_eyes(recording.eye_left, recording.eye_right);
    processed[slot(Modality::Gsr)] = sigproc::apply_pipeline(sigproc::modality_pipeline(Modality::Gsr), recording.gsr);
    processed[slot(Modality::Eeg)] = sigproc::apply_pipeline(sigproc::modality_pipeline(Modality::Eeg), recording.eeg);
    processed[slot(Modality::Ecg)] = sigproc::apply_pipeline(sigproc::modality_pipeline(Modality::Ecg), recording.ecg);
    processed[slot(Modality::Gsr)].names = canonical_names(Modality::Gsr);
    processed[slot(Modality::Ecg)].names = canonical_names(Modality::Ecg);

    std::array<std::vector<sigproc::TimeSeries>, network::kModalityCount> segments;
    std::size_t count = SIZE_MAX;
    for (Modality m : kModalityOrder) {
        segments[slot(m)] = sigproc::segment(processed[slot(m)], segment_seconds);
        count = std::min(count, segments[slot(m)].size());
    }

    std::vector<Sample> out;
    for (std::size_t k = 0; k < count; ++k) {
        Sample s;
        for (Modality m : kModalityOrder) s.segments[slot(m)] = std::move(segments[slot(m)][k]);
        s.arousal = recording.arousal;
        s.valence = recording.valence;
        s.subject_id = recording.subject_id;
        out.push_back(std::move(s));
    }
    return out;
}

Dataset generate_synthetic(std::size_t n_per_class, std::uint64_t seed, const SynthOptions& options) {
    if (n_per_class == 0) throw ConfigError("n_per_class must be at least 1");
    if (options.eye_rate == 0 || options.eye_rate > 0xFFFF) throw ConfigError("eye rate must be in [1, 65535]");
    Rng rng(seed);
    Dataset ds;
    ds.eye_rate = static_cast<std::uint16_t>(options.eye_rate);
    const auto signal_len = static_cast<std::size_t>(std::llround(options.seconds * network::kSignalRate));
    const auto eye_len = static_cast<std::size_t>(std::llround(options.seconds * static_cast<double>(options.eye_rate)));
    const double signal_rate = static_cast<double>(network::kSignalRate);

    for (std::size_t a = 0; a < kNumClasses; ++a) {
        for (std::size_t j = 0; j < n_per_class; ++j) {
            const Signature sig = signature_for(a, j, rng);
            Sample s;
            s.arousal = static_cast<std::uint8_t>(sig.arousal);
            s.valence = static_cast<std::uint8_t>(sig.valence);
            s.subject_id = static_cast<std::uint32_t>((a * n_per_class + j) % std::max<std::size_t>(options.subjects, 1));
            for (Modality m : kModalityOrder) {
                const bool eye = m == Modality::Eye;
                s.segments[slot(m)] = synth_series(eye ? static_cast<double>(options.eye_rate) : signal_rate,
                                                   canonical_names(m), eye ? eye_len : signal_len, sig, rng,
                                                   options.noise_level);
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

std::vector<RawRecording> generate_synthetic_raw(std::size_t n_per_class, std::uint64_t seed, std::size_t eye_rate,
                                                 double seconds) {
    if (n_per_class == 0) throw ConfigError("n_per_class must be at least 1");
    Rng rng(seed);
    const auto raw_len = static_cast<std::size_t>(std::llround(seconds * kRawRate));
    const auto eye_len = static_cast<std::size_t>(std::llround(seconds * static_cast<double>(eye_rate)));
    const double eye_hz = static_cast<double>(eye_rate);
    std::vector<RawRecording> out;

    auto add_line_noise = [&](sigproc::TimeSeries& s, double amplitude) {
        for (std::size_t c = 0; c < s.channels(); ++c) {
            auto row = s.data.row(c);
            for (std::size_t i = 0; i < row.size(); ++i)
                row[i] += amplitude * std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(i) / s.sample_rate);
        }
    };

    for (std::size_t a = 0; a < kNumClasses; ++a) {
        for (std::size_t j = 0; j < n_per_class; ++j) {
            const Signature sig = signature_for(a, j, rng);
            RawRecording rec;
            rec.subject_id = static_cast<std::uint32_t>(a * n_per_class + j);
            rec.arousal = static_cast<std::uint8_t>(sig.arousal);
            rec.valence = static_cast<std::uint8_t>(sig.valence);
            const std::vector<std::string> eye_names(sigproc::kEyeChannels.begin(), sigproc::kEyeChannels.end());
            rec.eye_left = synth_series(eye_hz, eye_names, eye_len, sig, rng, 1.0);
            rec.eye_right = synth_series(eye_hz, eye_names, eye_len, sig, rng, 1.0);
            rec.gsr = synth_series(kRawRate, {"GSR"}, raw_len, sig, rng, 1.0);
            for (double& v : rec.gsr.data.row(0)) v += 4.0;  // skin-conductance offset
            rec.eeg = synth_series(kRawRate, raw_eeg_montage(), raw_len, sig, rng, 1.0);
            rec.ecg = synth_series(kRawRate, {"ECG1", "ECG2", "ECG3"}, raw_len, sig, rng, 1.0);
            add_line_noise(rec.eeg, 0.5);
            add_line_noise(rec.ecg, 0.5);
            add_line_noise(rec.gsr, 0.2);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::string_view split_mode_name(SplitMode mode) { return mode == SplitMode::Stratified ? "stratified" : "subject"; }

SplitMode parse_split_mode(std::string_view name) {
    if (name == "stratified") return SplitMode::Stratified;
    if (name == "subject") return SplitMode::Subject;
    throw ConfigError("unknown split mode '" + std::string(name) + "' (expected stratified or subject)");
}

Split stratified_split(const std::vector<Sample>& samples, Task task, double train_fraction, std::uint64_t seed,
                       SplitMode mode) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
    Rng rng(seed);
    Split split;
    auto take = [&](std::vector<std::size_t>& members, const std::string& what) {
        if (members.size() < 2) {
            throw DataError(what + " has " + std::to_string(members.size()) + " member(s); at least 2 are needed to split");
        }
        rng.shuffle(members.begin(), members.end());
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        return n_train;
    };

    if (mode == SplitMode::Stratified) {
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < samples.size(); ++i)
                if (samples[i].label(task) == c) members.push_back(i);
            const std::size_t n_train = take(members, "class " + std::to_string(c));
            split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
            split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
        }
    } else {
        std::set<std::uint32_t> ids;
        for (const auto& s : samples) ids.insert(s.subject_id);
        std::vector<std::size_t> subjects(ids.begin(), ids.end());
        const std::size_t n_train = take(subjects, "subject list");
        const std::set<std::size_t> train_ids(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_train));
        for (std::size_t i = 0; i < samples.size(); ++i)
            (train_ids.contains(samples[i].subject_id) ? split.train : split.test).push_back(i);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<Sample> gather(const std::vector<Sample>& samples, std::span<const std::size_t> indices) {
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= samples.size()) throw DataError("sample index " + std::to_string(i) + " out of range");
        out.push_back(samples[i]);
    }
    return out;
}

std::vector<Sample> augment_samples(const std::vector<Sample>& samples, Rng& rng,
                                    const sigproc::AugmentOptions& options) {
    std::vector<Sample> out = samples;
    out.reserve(samples.size() * 3);
    for (const auto& s : samples) {
        Sample noisy = s;
        Sample scaled = s;
        noisy.augmented = scaled.augmented = true;
        for (Modality m : kModalityOrder) {
            auto variants = sigproc::augment(s.segment(m), rng, options);
            noisy.segments[slot(m)] = std::move(variants[0]);
            scaled.segments[slot(m)] = std::move(variants[1]);
        }
        out.push_back(std::move(noisy));
        out.push_back(std::move(scaled));
    }
    return out;
}

ModelBatch to_model_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices) {
    if (indices.empty()) throw DataError("to_model_batch: empty index list");
    for (std::size_t i : indices)
        if (i >= samples.size()) throw DataError("sample index " + std::to_string(i) + " out of range");

    ModelBatch batch;
    for (Modality m : kModalityOrder) {
        const auto& first = samples[indices[0]].segment(m);
        const std::size_t width = first.channels() * first.samples();
        Matrix x(indices.size(), width);
        for (std::size_t r = 0; r < indices.size(); ++r) {
            const auto& seg = samples[indices[r]].segment(m);
            if (seg.channels() != first.channels() || seg.samples() != first.samples()) {
                throw ShapeError(sample_context(indices[r], m) + ": segment " + seg.data.shape_string() +
                                 " differs from " + first.data.shape_string());
            }
            auto src = seg.data.data();
            std::copy(src.begin(), src.end(), x.row(r).begin());
        }
        batch.inputs[slot(m)] = std::move(x);
    }
    for (std::size_t i : indices) {
        batch.arousal.push_back(samples[i].arousal);
        batch.valence.push_back(samples[i].valence);
    }
    return batch;
}

void validate_against(const std::vector<Sample>& samples, const network::ModelConfig& config) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (Modality m : kModalityOrder) {
            const auto& spec = config.spec(m);
            const auto& seg = samples[i].segment(m);
            const std::size_t width = seg.channels() * seg.samples();
            if (seg.channels() != spec.channels || width != spec.input_width()) {
                throw ShapeError(sample_context(i, m) + ": flattened width " + std::to_string(width) + " (" +
                                 seg.data.shape_string() + "), model expects " + std::to_string(spec.input_width()));
            }
            if (width % spec.n != 0) {
                throw ShapeError(sample_context(i, m) + ": width " + std::to_string(width) + " not divisible by n=" +
                                 std::to_string(spec.n));
            }
        }
    }
}

network::ModelConfig config_for(const Dataset& dataset) { return network::default_config(dataset.eye_rate); }

std::array<std::size_t, kNumClasses> class_counts(const std::vector<Sample>& samples, Task task) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& s : samples) ++counts[s.label(task)];
    return counts;
}

}  // namespace phemonet::data
