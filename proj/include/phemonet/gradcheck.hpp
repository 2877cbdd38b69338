#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace phemonet::gradcheck {

struct Row {
    std::string name;
    std::size_t count = 0;
    double max_rel_error = 0.0;
};

struct Report {
    /// One row per parameter group (e.g. "eeg.A3", "fusion2.bn.gamma").
    std::vector<Row> groups;
    /// One row per layer, the maximum over that layer's groups.
    std::vector<Row> layers;

    double max_rel_error() const;
};

struct Options {
    std::uint64_t seed = 7;
    std::size_t batch = 4;
    double eps = 1e-5;
    /// Denominator floor for the relative error; see relative_error(). Central differences of an
    /// O(1) loss carry ~1e-11 of roundoff, so entries whose true gradient is zero (biases feeding a
    /// train-mode batchnorm) need a floor well above that.
    double floor = 1e-4;
    /// Test hook: perturbs the analytic gradients by 10% so the check must fail.
    bool corrupt_backward = false;
};

/// PHM layers with n in {1, 2, 3, 4, 10}: analytic backward of <upstream, forward(x)> against
/// central differences for A, F, bias and the input.
Report phm_suite(const Options& options = {});

/// The reduced full model (encoders 8/4/40/12, fusion 64 -> 32 -> 16 -> 8, classifier) in
/// train mode with a fixed dropout mask: cross-entropy gradient for every trainable group.
Report network_suite(const Options& options = {});

inline constexpr double kTolerance = 1e-5;

}  // namespace phemonet::gradcheck
