#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phemonet/linalg.hpp"
#include "phemonet/network.hpp"
#include "phemonet/rng.hpp"

namespace phemonet::sigproc {

/// Multichannel signal: data is channels x samples.
struct TimeSeries {
    double sample_rate = 1.0;
    std::vector<std::string> names;
    Matrix data;

    std::size_t channels() const noexcept { return data.rows(); }
    std::size_t samples() const noexcept { return data.cols(); }
};

/// Builds a series and checks rate > 0 and one name per channel.
TimeSeries make_series(double sample_rate, std::vector<std::string> names, Matrix data);

/// Second-order section in transposed direct form II, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

enum class FilterKind { Lowpass, Highpass, Bandpass };

/// Butterworth design by bilinear transform with prewarping. Band-pass is a high-pass at lo
/// cascaded with a low-pass at hi, each of the given order.
Sos design_butterworth(FilterKind kind, double lo, double hi, int order, double sample_rate);

/// Second-order notch (zeros on the unit circle at f0, bandwidth f0 / q).
Sos design_notch(double f0, double q, double sample_rate);

/// Causal single pass, zero initial state.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);

/// Forward pass then reversed pass over an odd-extended signal, with steady-state initial
/// conditions. Length preserving, zero phase.
std::vector<double> filtfilt(const Sos& sos, std::span<const double> x);

inline constexpr int kDefaultFilterOrder = 4;
inline constexpr double kDefaultNotchQ = 30.0;

/// lo is ignored for low-pass; hi is ignored for high-pass.
TimeSeries butterworth_filter(const TimeSeries& x, FilterKind kind, double lo, double hi,
                              int order = kDefaultFilterOrder);
TimeSeries notch_filter(const TimeSeries& x, double f0, double q = kDefaultNotchQ);

/// Anti-alias low-pass at 0.9x the new Nyquist, then every second sample (ceil(len / 2)).
TimeSeries downsample_by_two(const TimeSeries& x);

/// Subtracts the mean of the first second from a single-channel signal.
TimeSeries correct_gsr_baseline(const TimeSeries& x);

inline const std::array<std::string, 10> kEegChannels = {"F3", "F4", "F5", "F6", "F7",
                                                        "F8", "T7", "T8", "P7", "P8"};

/// Keeps kEegChannels in that order and re-references to their per-sample average.
TimeSeries select_eeg_channels(const TimeSeries& x);

inline const std::array<std::string, 4> kEyeChannels = {"gaze_x", "gaze_y", "pupil", "distance"};

/// Element-wise mean of the two eyes; -1 blink markers are kept as ordinary values.
TimeSeries average_eyes(const TimeSeries& left, const TimeSeries& right);

/// Non-overlapping windows of round(seconds * rate) samples; the remainder is dropped.
std::vector<TimeSeries> segment(const TimeSeries& x, double seconds);

struct AugmentOptions {
    double noise_sigma_ratio = 0.05;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
};

/// Returns {noisy, scaled}: the first adds per-channel Gaussian noise with sigma equal to
/// noise_sigma_ratio times that channel's std; the second multiplies by s ~ U(lo, hi).
std::array<TimeSeries, 2> augment(const TimeSeries& seg, Rng& rng, const AugmentOptions& options = {});

/// One preprocessing operation. Pipelines are data so that they can be printed and compared.
struct Step {
    enum class Kind { AverageEyes, SelectEeg, Bandpass, Lowpass, Notch, Downsample, BaselineCorrect };
    Kind kind;
    double lo = 0.0;
    double hi = 0.0;

    std::string describe() const;
};

/// The preprocessing chain applied to each modality:
///   eeg: select -> band-pass 1-45 Hz -> notch 50 Hz -> downsample
///   ecg: band-pass 0.5-45 Hz -> notch 50 Hz -> downsample
///   gsr: low-pass 50 Hz -> notch 50 Hz -> downsample -> baseline
///   eye: average of both eyes only
std::vector<Step> modality_pipeline(network::Modality modality);

std::string describe_pipeline(const std::vector<Step>& steps);

/// Runs a single-input pipeline (every modality except eye).
TimeSeries apply_pipeline(const std::vector<Step>& steps, const TimeSeries& x);

}  // namespace phemonet::sigproc
