#include "phemonet/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "phemonet/errors.hpp"

namespace phemonet::sigproc {

namespace {

constexpr double kNotchFrequency = 50.0;

void check_cutoff(double f, double sample_rate, const char* what) {
    if (!(f > 0.0) || !(f < sample_rate / 2.0)) {
        std::ostringstream os;
        os << what << " " << f << " Hz must lie strictly inside (0, " << sample_rate / 2.0 << ") Hz";
        throw ConfigError(os.str());
    }
}

// Butterworth sections for one edge. Even orders give order/2 biquads; an odd order adds
// a first-order section.
void append_butterworth(Sos& sos, bool highpass, double fc, int order, double sample_rate) {
    const double k = std::tan(std::numbers::pi * fc / sample_rate);
    const double k2 = k * k;
    for (int i = 1; i <= order / 2; ++i) {
        const double q = 1.0 / (2.0 * std::cos(std::numbers::pi * (2.0 * i - 1.0) / (2.0 * order)));
        const double norm = 1.0 / (1.0 + k / q + k2);
        Biquad s;
        if (highpass) {
            s.b0 = norm;
            s.b1 = -2.0 * norm;
            s.b2 = norm;
        } else {
            s.b0 = k2 * norm;
            s.b1 = 2.0 * s.b0;
            s.b2 = s.b0;
        }
        s.a1 = 2.0 * (k2 - 1.0) * norm;
        s.a2 = (1.0 - k / q + k2) * norm;
        sos.push_back(s);
    }
    if (order % 2 == 1) {
        Biquad s;
        if (highpass) {
            s.b0 = 1.0 / (1.0 + k);
            s.b1 = -s.b0;
        } else {
            s.b0 = k / (1.0 + k);
            s.b1 = s.b0;
        }
        s.a1 = (k - 1.0) / (k + 1.0);
        sos.push_back(s);
    }
}

// Initial state of each section for a unit step held forever.
std::vector<std::array<double, 2>> steady_state(const Sos& sos) {
    std::vector<std::array<double, 2>> zi;
    double gain = 1.0;
    for (const auto& s : sos) {
        const double denom = 1.0 + s.a1 + s.a2;
        const double h = (s.b0 + s.b1 + s.b2) / denom;
        const double z2 = s.b2 - s.a2 * h;
        const double z1 = s.b1 + s.b2 - (s.a1 + s.a2) * h;
        zi.push_back({gain * z1, gain * z2});
        gain *= h;
    }
    return zi;
}

void run_sections(const Sos& sos, std::vector<double>& x, std::vector<std::array<double, 2>> state) {
    for (std::size_t si = 0; si < sos.size(); ++si) {
        const auto& s = sos[si];
        double z1 = state[si][0];
        double z2 = state[si][1];
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

std::vector<std::array<double, 2>> scaled(const std::vector<std::array<double, 2>>& zi, double by) {
    auto out = zi;
    for (auto& z : out) {
        z[0] *= by;
        z[1] *= by;
    }
    return out;
}

TimeSeries map_channels(const TimeSeries& x, const Sos& sos) {
    TimeSeries out = x;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        const auto filtered = filtfilt(sos, x.data.row(c));
        std::copy(filtered.begin(), filtered.end(), out.data.row(c).begin());
    }
    return out;
}

std::string hz(double f) {
    std::ostringstream os;
    os << f;
    return os.str();
}

}  // namespace

TimeSeries make_series(double sample_rate, std::vector<std::string> names, Matrix data) {
    if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
    if (names.size() != data.rows()) {
        throw ShapeError("series has " + std::to_string(data.rows()) + " channels but " + std::to_string(names.size()) +
                         " names");
    }
    return TimeSeries{.sample_rate = sample_rate, .names = std::move(names), .data = std::move(data)};
}

Sos design_butterworth(FilterKind kind, double lo, double hi, int order, double sample_rate) {
    if (order < 1) throw ConfigError("filter order must be at least 1");
    Sos sos;
    switch (kind) {
        case FilterKind::Lowpass:
            check_cutoff(hi, sample_rate, "low-pass cutoff");
            append_butterworth(sos, false, hi, order, sample_rate);
            break;
        case FilterKind::Highpass:
            check_cutoff(lo, sample_rate, "high-pass cutoff");
            append_butterworth(sos, true, lo, order, sample_rate);
            break;
        case FilterKind::Bandpass:
            check_cutoff(lo, sample_rate, "band-pass lower edge");
            check_cutoff(hi, sample_rate, "band-pass upper edge");
            if (!(lo < hi)) throw ConfigError("band-pass lower edge must be below the upper edge");
            append_butterworth(sos, true, lo, order, sample_rate);
            append_butterworth(sos, false, hi, order, sample_rate);
            break;
    }
    return sos;
}

Sos design_notch(double f0, double q, double sample_rate) {
    check_cutoff(f0, sample_rate, "notch frequency");
    if (!(q > 0.0)) throw ConfigError("notch quality factor must be positive");
    const double w0 = 2.0 * std::numbers::pi * f0 / sample_rate;
    const double beta = std::tan(w0 / q / 2.0);
    const double gain = 1.0 / (1.0 + beta);
    const double c = std::cos(w0);
    return {Biquad{.b0 = gain, .b1 = -2.0 * gain * c, .b2 = gain, .a1 = -2.0 * gain * c, .a2 = 2.0 * gain - 1.0}};
}

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_sections(sos, y, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
    return y;
}

std::vector<double> filtfilt(const Sos& sos, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return {x.begin(), x.end()};
    const std::size_t pad = std::min(n - 1, 3 * (2 * sos.size() + 1));

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = steady_state(sos);
    run_sections(sos, ext, scaled(zi, ext.front()));
    std::reverse(ext.begin(), ext.end());
    run_sections(sos, ext, scaled(zi, ext.front()));
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

TimeSeries butterworth_filter(const TimeSeries& x, FilterKind kind, double lo, double hi, int order) {
    return map_channels(x, design_butterworth(kind, lo, hi, order, x.sample_rate));
}

TimeSeries notch_filter(const TimeSeries& x, double f0, double q) {
    return map_channels(x, design_notch(f0, q, x.sample_rate));
}

TimeSeries downsample_by_two(const TimeSeries& x) {
    const double rate = x.sample_rate;
    if (rate != std::floor(rate) || static_cast<long long>(rate) % 2 != 0) {
        throw ConfigError("downsample_by_two needs an even integer sample rate, got " + hz(rate));
    }
    const double new_rate = rate / 2.0;
    const TimeSeries smooth = butterworth_filter(x, FilterKind::Lowpass, 0.0, 0.9 * new_rate / 2.0);
    const std::size_t len = (x.samples() + 1) / 2;
    Matrix out(x.channels(), len);
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto src = smooth.data.row(c);
        auto dst = out.row(c);
        for (std::size_t i = 0; i < len; ++i) dst[i] = src[2 * i];
    }
    return TimeSeries{.sample_rate = new_rate, .names = x.names, .data = std::move(out)};
}

TimeSeries correct_gsr_baseline(const TimeSeries& x) {
    if (x.channels() != 1) throw ShapeError("GSR baseline correction expects one channel, got " + std::to_string(x.channels()));
    const auto window = static_cast<std::size_t>(std::llround(x.sample_rate));
    if (window == 0 || x.samples() < window) {
        throw LengthError("GSR baseline correction needs at least one second (" + std::to_string(window) +
                          " samples), got " + std::to_string(x.samples()));
    }
    auto row = x.data.row(0);
    double mean = 0.0;
    for (std::size_t i = 0; i < window; ++i) mean += row[i];
    mean /= static_cast<double>(window);
    TimeSeries out = x;
    for (double& v : out.data.row(0)) v -= mean;
    return out;
}

TimeSeries select_eeg_channels(const TimeSeries& x) {
    std::vector<std::size_t> index;
    std::vector<std::string> missing;
    for (const auto& name : kEegChannels) {
        auto it = std::find(x.names.begin(), x.names.end(), name);
        if (it == x.names.end()) {
            missing.push_back(name);
        } else {
            index.push_back(static_cast<std::size_t>(it - x.names.begin()));
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw DataError("EEG recording lacks channel(s): " + list);
    }

    const std::size_t len = x.samples();
    Matrix out(kEegChannels.size(), len);
    for (std::size_t c = 0; c < index.size(); ++c) {
        auto src = x.data.row(index[c]);
        std::copy(src.begin(), src.end(), out.row(c).begin());
    }
    const double inv = 1.0 / static_cast<double>(kEegChannels.size());
    for (std::size_t t = 0; t < len; ++t) {
        double mean = 0.0;
        for (std::size_t c = 0; c < out.rows(); ++c) mean += out(c, t);
        mean *= inv;
        for (std::size_t c = 0; c < out.rows(); ++c) out(c, t) -= mean;
    }
    return TimeSeries{.sample_rate = x.sample_rate,
                      .names = std::vector<std::string>(kEegChannels.begin(), kEegChannels.end()),
                      .data = std::move(out)};
}

TimeSeries average_eyes(const TimeSeries& left, const TimeSeries& right) {
    if (left.samples() != right.samples() || left.channels() != right.channels()) {
        throw DataError("eye streams differ in shape: left " + left.data.shape_string() + ", right " +
                        right.data.shape_string());
    }
    if (left.sample_rate != right.sample_rate) throw DataError("eye streams differ in sample rate");
    if (left.channels() != kEyeChannels.size()) {
        throw DataError("eye streams must have " + std::to_string(kEyeChannels.size()) + " channels, got " +
                        std::to_string(left.channels()));
    }
    Matrix out = left.data + right.data;
    out *= 0.5;
    return TimeSeries{.sample_rate = left.sample_rate,
                      .names = std::vector<std::string>(kEyeChannels.begin(), kEyeChannels.end()),
                      .data = std::move(out)};
}

std::vector<TimeSeries> segment(const TimeSeries& x, double seconds) {
    const auto window = static_cast<std::size_t>(std::llround(seconds * x.sample_rate));
    if (window == 0) throw LengthError("segment window rounds to zero samples");
    if (window > x.samples()) {
        throw LengthError("segment window of " + std::to_string(window) + " samples exceeds recording length " +
                          std::to_string(x.samples()));
    }
    std::vector<TimeSeries> out;
    for (std::size_t start = 0; start + window <= x.samples(); start += window) {
        out.push_back(TimeSeries{.sample_rate = x.sample_rate, .names = x.names, .data = x.data.col_block(start, window)});
    }
    return out;
}

std::array<TimeSeries, 2> augment(const TimeSeries& seg, Rng& rng, const AugmentOptions& options) {
    if (!(options.noise_sigma_ratio >= 0.0)) throw ConfigError("noise sigma ratio must be non-negative");
    if (!(options.scale_lo > 0.0) || !(options.scale_lo <= options.scale_hi)) {
        throw ConfigError("scale range must satisfy 0 < lo <= hi");
    }

    TimeSeries noisy = seg;
    if (options.noise_sigma_ratio > 0.0) {
        for (std::size_t c = 0; c < seg.channels(); ++c) {
            auto row = seg.data.row(c);
            double mean = 0.0;
            for (double v : row) mean += v;
            mean /= static_cast<double>(row.size());
            double var = 0.0;
            for (double v : row) var += (v - mean) * (v - mean);
            const double sigma = options.noise_sigma_ratio * std::sqrt(var / static_cast<double>(row.size()));
            if (!(sigma > 0.0)) continue;
            for (double& v : noisy.data.row(c)) v += rng.normal(0.0, sigma);
        }
    }

    TimeSeries scaled_copy = seg;
    const double s =
        options.scale_lo == options.scale_hi ? options.scale_lo : rng.uniform(options.scale_lo, options.scale_hi);
    if (s != 1.0) scaled_copy.data *= s;
    return {std::move(noisy), std::move(scaled_copy)};
}

std::string Step::describe() const {
    switch (kind) {
        case Kind::AverageEyes: return "average_eyes";
        case Kind::SelectEeg: {
            std::string s = "select_eeg(";
            for (std::size_t i = 0; i < kEegChannels.size(); ++i) s += (i ? "," : "") + kEegChannels[i];
            return s + ";avg_ref)";
        }
        case Kind::Bandpass: return "bandpass(" + hz(lo) + "-" + hz(hi) + "Hz)";
        case Kind::Lowpass: return "lowpass(" + hz(hi) + "Hz)";
        case Kind::Notch: return "notch(" + hz(lo) + "Hz)";
        case Kind::Downsample: return "downsample(x2)";
        case Kind::BaselineCorrect: return "baseline(first 1s)";
    }
    return "?";
}

std::vector<Step> modality_pipeline(network::Modality modality) {
    using K = Step::Kind;
    const Step notch{K::Notch, kNotchFrequency, 0.0};
    switch (modality) {
        case network::Modality::Eye: return {{K::AverageEyes}};
        case network::Modality::Eeg: return {{K::SelectEeg}, {K::Bandpass, 1.0, 45.0}, notch, {K::Downsample}};
        case network::Modality::Ecg: return {{K::Bandpass, 0.5, 45.0}, notch, {K::Downsample}};
        case network::Modality::Gsr: return {{K::Lowpass, 0.0, 50.0}, notch, {K::Downsample}, {K::BaselineCorrect}};
    }
    return {};
}

std::string describe_pipeline(const std::vector<Step>& steps) {
    std::string s;
    for (const auto& step : steps) s += (s.empty() ? "" : " -> ") + step.describe();
    return s;
}

TimeSeries apply_pipeline(const std::vector<Step>& steps, const TimeSeries& x) {
    TimeSeries cur = x;
    for (const auto& step : steps) {
        switch (step.kind) {
            case Step::Kind::AverageEyes:
                throw ConfigError("average_eyes takes two streams; call average_eyes directly");
            case Step::Kind::SelectEeg: cur = select_eeg_channels(cur); break;
            case Step::Kind::Bandpass: cur = butterworth_filter(cur, FilterKind::Bandpass, step.lo, step.hi); break;
            case Step::Kind::Lowpass: cur = butterworth_filter(cur, FilterKind::Lowpass, 0.0, step.hi); break;
            case Step::Kind::Notch: cur = notch_filter(cur, step.lo); break;
            case Step::Kind::Downsample: cur = downsample_by_two(cur); break;
            case Step::Kind::BaselineCorrect: cur = correct_gsr_baseline(cur); break;
        }
    }
    return cur;
}

}  // namespace phemonet::sigproc
