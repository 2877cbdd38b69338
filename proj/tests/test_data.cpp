#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "phemonet/data.hpp"
#include "phemonet/errors.hpp"

using phemonet::Matrix;
namespace data = phemonet::data;
namespace net = phemonet::network;
using net::Modality;

namespace {

std::vector<data::Sample> labelled(const std::array<std::size_t, 3>& counts) {
    std::vector<data::Sample> out;
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < counts[k]; ++i) {
            data::Sample s;
            s.arousal = static_cast<std::uint8_t>(k);
            s.valence = static_cast<std::uint8_t>((k + i) % 3);
            s.subject_id = static_cast<std::uint32_t>(out.size() % 7);
            out.push_back(std::move(s));
        }
    return out;
}

// Log power in 1 Hz bands [f, f + 1) for f = 1..24, summed over the first three channels.
std::vector<double> band_powers(const phemonet::sigproc::TimeSeries& x) {
    const std::size_t n = x.samples();
    const double rate = x.sample_rate;
    std::vector<double> bands(24, 0.0);
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double f = static_cast<double>(k) * rate / static_cast<double>(n);
        if (f < 1.0 || f >= 25.0) continue;
        double p = 0.0;
        for (std::size_t c = 0; c < std::min<std::size_t>(3, x.channels()); ++c) {
            double re = 0.0, im = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double ph = 2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
                re += x.data(c, t) * std::cos(ph);
                im -= x.data(c, t) * std::sin(ph);
            }
            p += re * re + im * im;
        }
        bands[static_cast<std::size_t>(f) - 1] += p;
    }
    for (double& b : bands) b = std::log(b + 1e-12);
    return bands;
}

}  // namespace

TEST_CASE("dataset round trip") {
    phemonet::Rng rng(1);
    const auto ds = fixture::random_dataset(rng);
    const auto bytes = data::encode_dataset(ds);
    const auto back = data::decode_dataset(bytes);
    CHECK(data::encode_dataset(back) == bytes);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].arousal == ds.samples[i].arousal);
        CHECK(back.samples[i].subject_id == ds.samples[i].subject_id);
        CHECK(back.samples[i].augmented == ds.samples[i].augmented);
        for (Modality m : net::kModalityOrder) {
            const auto& a = ds.samples[i].segment(m).data;
            const auto& b = back.samples[i].segment(m).data;
            for (std::size_t k = 0; k < a.size(); ++k) CHECK(b.data()[k] == static_cast<double>(static_cast<float>(a.data()[k])));
        }
    }

    const auto path = std::filesystem::temp_directory_path() / "phemonet_test_roundtrip.phds";
    data::write_dataset(back, path);
    CHECK(data::encode_dataset(data::read_dataset(path)) == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("dataset round trip on random instances") {
    phemonet::Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto bytes = data::encode_dataset(fixture::random_dataset(rng));
        CHECK(data::encode_dataset(data::decode_dataset(bytes)) == bytes);
    }
}

TEST_CASE("empty dataset") {
    data::Dataset ds;
    const auto bytes = data::encode_dataset(ds);
    CHECK(bytes.size() == 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PHDS");
    CHECK(data::decode_dataset(bytes).samples.empty());
}

TEST_CASE("dataset layout") {
    phemonet::Rng rng(3);
    data::Dataset ds;
    ds.eye_rate = 8;
    ds.samples.push_back(fixture::random_sample(rng, 8, 1));
    ds.samples[0].subject_id = 0x01020304;
    ds.samples[0].arousal = 2;
    ds.samples[0].valence = 1;
    ds.samples[0].augmented = true;
    const auto b = data::encode_dataset(ds);
    // header: magic, u16 version, u32 count, u16 eye rate
    CHECK(b[4] == 1);
    CHECK(b[5] == 0);
    CHECK(b[6] == 1);
    CHECK(b[10] == 8);
    // sample: u32 subject, u8 arousal, u8 valence, u8 augmented, then eye u8 channels, u32 samples
    CHECK(b[12] == 0x04);
    CHECK(b[15] == 0x01);
    CHECK(b[16] == 2);
    CHECK(b[17] == 1);
    CHECK(b[18] == 1);
    CHECK(b[19] == 4);
    CHECK(b[20] == 8);
    const std::size_t per_sample = 7 + (5 + 4 * 4 * 8) + (5 + 4 * 1 * 128) + (5 + 4 * 10 * 128) + (5 + 4 * 3 * 128);
    CHECK(b.size() == 12 + per_sample);
    float first;
    std::memcpy(&first, b.data() + 24, 4);
    CHECK(first == static_cast<float>(ds.samples[0].segment(Modality::Eye).data(0, 0)));
}

TEST_CASE("truncated and corrupt dataset files") {
    phemonet::Rng rng(4);
    data::Dataset ds;
    for (int i = 0; i < 10; ++i) ds.samples.push_back(fixture::random_sample(rng, 60, 1));
    const auto full = data::encode_dataset(ds);
    const std::size_t body = (full.size() - 12) / 10;
    const std::vector<std::uint8_t> nine(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(12 + 9 * body));
    try {
        data::decode_dataset(nine);
        FAIL("expected FormatError");
    } catch (const phemonet::FormatError& e) {
        CHECK(e.offset() == 12 + 9 * body);
    }

    auto bad = full;
    bad[0] = 'X';
    CHECK_THROWS_AS(data::decode_dataset(bad), phemonet::FormatError);
    bad = full;
    bad[4] = 9;
    CHECK_THROWS_AS(data::decode_dataset(bad), phemonet::FormatError);
    bad = full;
    bad[16] = 3;  // arousal label out of range
    CHECK_THROWS_AS(data::decode_dataset(bad), phemonet::FormatError);
    bad = full;
    bad[19] = 5;  // eye channel count
    CHECK_THROWS_AS(data::decode_dataset(bad), phemonet::FormatError);
    bad = full;
    bad.push_back(0);
    CHECK_THROWS_AS(data::decode_dataset(bad), phemonet::FormatError);
    for (std::size_t cut = 0; cut < full.size(); cut += 97) {
        const std::vector<std::uint8_t> part(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK_THROWS_AS(data::decode_dataset(part), phemonet::FormatError);
    }
    CHECK_THROWS_AS(data::read_dataset("/nonexistent/dir/file.phds"), phemonet::IoError);
}

TEST_CASE("synthetic data: balance and determinism") {
    const auto a = data::generate_synthetic(4, 7);
    const auto b = data::generate_synthetic(4, 7);
    CHECK(data::encode_dataset(a) == data::encode_dataset(b));
    CHECK(data::encode_dataset(a) != data::encode_dataset(data::generate_synthetic(4, 8)));
    CHECK(a.samples.size() == 12);
    for (auto task : {data::Task::Arousal, data::Task::Valence}) {
        const auto counts = data::class_counts(a.samples, task);
        for (auto c : counts) CHECK(c == 4);
    }
    for (const auto& s : a.samples) {
        CHECK(s.segment(Modality::Eeg).channels() == 10);
        CHECK(s.segment(Modality::Eeg).samples() == 1280);
        CHECK(s.segment(Modality::Eye).samples() == 600);
        CHECK(s.segment(Modality::Gsr).channels() == 1);
        CHECK(s.segment(Modality::Ecg).channels() == 3);
    }
}

TEST_CASE("synthetic data carries a learnable signal") {
    // Multinomial logistic regression on log band powers of the EEG segment, trained by
    // gradient descent on one synthetic set and scored on another.
    auto features = [](const data::Dataset& ds) {
        std::vector<std::vector<double>> x;
        for (const auto& s : ds.samples) {
            auto f = band_powers(s.segment(Modality::Eeg));
            f.push_back(1.0);
            x.push_back(std::move(f));
        }
        return x;
    };
    const auto train = data::generate_synthetic(20, 11);
    const auto test = data::generate_synthetic(10, 12);
    const auto xtr = features(train), xte = features(test);
    const std::size_t d = xtr[0].size();

    // Standardize with training statistics (bias column untouched).
    std::vector<double> mu(d, 0.0), sd(d, 0.0);
    for (const auto& r : xtr)
        for (std::size_t j = 0; j + 1 < d; ++j) mu[j] += r[j] / static_cast<double>(xtr.size());
    for (const auto& r : xtr)
        for (std::size_t j = 0; j + 1 < d; ++j) sd[j] += std::pow(r[j] - mu[j], 2) / static_cast<double>(xtr.size());
    auto standardize = [&](std::vector<std::vector<double>> x) {
        for (auto& r : x)
            for (std::size_t j = 0; j + 1 < d; ++j) r[j] = (r[j] - mu[j]) / std::sqrt(sd[j] + 1e-12);
        return x;
    };
    const auto str = standardize(xtr), ste = standardize(xte);

    for (auto task : {data::Task::Arousal, data::Task::Valence}) {
        std::vector<std::array<double, 3>> w(d, {0.0, 0.0, 0.0});
        auto probs = [&](const std::vector<double>& r) {
            std::array<double, 3> z{};
            for (std::size_t k = 0; k < 3; ++k)
                for (std::size_t j = 0; j < d; ++j) z[k] += w[j][k] * r[j];
            const double mx = std::max({z[0], z[1], z[2]});
            double s = 0.0;
            for (double& v : z) s += (v = std::exp(v - mx));
            for (double& v : z) v /= s;
            return z;
        };
        for (int it = 0; it < 500; ++it) {
            std::vector<std::array<double, 3>> g(d, {0.0, 0.0, 0.0});
            for (std::size_t i = 0; i < str.size(); ++i) {
                auto p = probs(str[i]);
                p[train.samples[i].label(task)] -= 1.0;
                for (std::size_t j = 0; j < d; ++j)
                    for (std::size_t k = 0; k < 3; ++k) g[j][k] += p[k] * str[i][j] / static_cast<double>(str.size());
            }
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = 0; k < 3; ++k) w[j][k] -= 0.5 * g[j][k];
        }
        std::size_t correct = 0;
        for (std::size_t i = 0; i < ste.size(); ++i) {
            const auto p = probs(ste[i]);
            const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
            correct += pred == test.samples[i].label(task);
        }
        INFO(data::task_name(task));
        CHECK(static_cast<double>(correct) / static_cast<double>(ste.size()) >= 0.8);
    }
}

TEST_CASE("stratified split: exact arithmetic") {
    const auto samples = labelled({50, 30, 20});
    const auto split = data::stratified_split(samples, data::Task::Arousal, 0.8, 1);
    std::array<std::size_t, 3> tr{}, te{};
    for (auto i : split.train) ++tr[samples[i].arousal];
    for (auto i : split.test) ++te[samples[i].arousal];
    CHECK(tr == std::array<std::size_t, 3>{40, 24, 16});
    CHECK(te == std::array<std::size_t, 3>{10, 6, 4});

    std::set<std::size_t> all(split.train.begin(), split.train.end());
    for (auto i : split.test) CHECK(all.insert(i).second);
    CHECK(all.size() == samples.size());

    const auto again = data::stratified_split(samples, data::Task::Arousal, 0.8, 1);
    CHECK(again.train == split.train);
    CHECK(again.test == split.test);
    CHECK(data::stratified_split(samples, data::Task::Arousal, 0.8, 2).train != split.train);
}

TEST_CASE("stratified split: proportions on random class sizes") {
    phemonet::Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::array<std::size_t, 3> counts{2 + rng.next() % 40, 2 + rng.next() % 40, 2 + rng.next() % 40};
        const auto samples = labelled(counts);
        const double frac = rng.uniform(0.5, 0.9);
        const auto split = data::stratified_split(samples, data::Task::Arousal, frac, rng.next());
        std::array<std::size_t, 3> tr{};
        for (auto i : split.train) ++tr[samples[i].arousal];
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(static_cast<double>(tr[k]) - frac * static_cast<double>(counts[k])) <= 1.0);
            CHECK(tr[k] >= 1);
            CHECK(tr[k] < counts[k]);
        }
        CHECK(split.train.size() + split.test.size() == samples.size());
    }
}

TEST_CASE("stratified split: errors and subject mode") {
    CHECK_THROWS_AS(data::stratified_split(labelled({5, 1, 5}), data::Task::Arousal, 0.8, 1), phemonet::DataError);

    const auto samples = labelled({20, 20, 20});
    const auto split = data::stratified_split(samples, data::Task::Arousal, 0.8, 3, data::SplitMode::Subject);
    std::set<std::uint32_t> train_subjects, test_subjects;
    for (auto i : split.train) train_subjects.insert(samples[i].subject_id);
    for (auto i : split.test) test_subjects.insert(samples[i].subject_id);
    for (auto s : test_subjects) CHECK_FALSE(train_subjects.contains(s));
    CHECK(split.train.size() + split.test.size() == samples.size());
    CHECK(data::parse_split_mode("subject") == data::SplitMode::Subject);
    CHECK_THROWS_AS(data::parse_split_mode("random"), phemonet::ConfigError);
}

TEST_CASE("augment_samples keeps originals first") {
    const auto ds = data::generate_synthetic(1, 2);
    phemonet::Rng rng(1);
    const auto aug = data::augment_samples(ds.samples, rng);
    REQUIRE(aug.size() == 9);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK_FALSE(aug[i].augmented);
        CHECK(aug[i].segment(Modality::Eeg).data == ds.samples[i].segment(Modality::Eeg).data);
    }
    for (std::size_t i = 3; i < 9; ++i) CHECK(aug[i].augmented);
    std::size_t matched = 0;
    for (std::size_t i = 3; i < 9; ++i) matched += aug[i].arousal == ds.samples[(i - 3) / 2].arousal;
    CHECK(matched == 6);
}

TEST_CASE("to_model_batch flattens channel-major") {
    const auto ds = data::generate_synthetic(1, 3);
    const std::vector<std::size_t> idx{2, 0};
    const auto b = data::to_model_batch(ds.samples, idx);
    CHECK(b.inputs[net::slot(Modality::Eeg)].cols() == 12800);
    CHECK(b.inputs[net::slot(Modality::Ecg)].cols() == 3840);
    CHECK(b.inputs[net::slot(Modality::Gsr)].cols() == 1280);
    CHECK(b.inputs[net::slot(Modality::Eye)].cols() == 2400);
    CHECK(12800 % 10 == 0);
    CHECK(3840 % 3 == 0);
    CHECK(2400 % 4 == 0);
    const auto& ecg = ds.samples[2].segment(Modality::Ecg).data;
    CHECK(b.inputs[net::slot(Modality::Ecg)](0, 1280 + 7) == ecg(1, 7));
    CHECK(b.inputs[net::slot(Modality::Ecg)](0, 2 * 1280) == ecg(2, 0));
    CHECK(b.arousal[0] == ds.samples[2].arousal);
    CHECK(b.valence[1] == ds.samples[0].valence);

    auto broken = ds.samples;
    broken[0].segments[net::slot(Modality::Eeg)].data = Matrix(10, 1000);
    CHECK_THROWS_AS(data::to_model_batch(broken, idx), phemonet::ShapeError);
    CHECK_THROWS_AS(data::validate_against(broken, data::config_for(ds)), phemonet::ShapeError);
}

TEST_CASE("ingestion-time width check for other eye rates") {
    for (std::uint16_t rate : {30, 60, 120, 250}) {
        data::Dataset ds;
        ds.eye_rate = rate;
        const auto config = data::config_for(ds);
        const auto& eye = config.spec(Modality::Eye);
        CHECK(eye.input_width() == 4u * 10u * rate);
        CHECK(eye.input_width() % eye.n == 0);
    }
}

TEST_CASE("raw recordings and preprocessing") {
    const auto recs = data::generate_synthetic_raw(1, 4, 60, 25.0);
    REQUIRE(recs.size() == 3);
    const auto bytes = data::encode_raw(recs);
    CHECK(data::encode_raw(data::decode_raw(bytes)) == bytes);
    const auto samples = data::preprocess_recording(recs[0]);
    REQUIRE(samples.size() == 2);
    for (const auto& s : samples) {
        CHECK(s.segment(Modality::Eeg).channels() == 10);
        CHECK(s.segment(Modality::Eeg).samples() == 1280);
        CHECK(s.segment(Modality::Eeg).sample_rate == 128.0);
        CHECK(s.segment(Modality::Ecg).samples() == 1280);
        CHECK(s.segment(Modality::Gsr).samples() == 1280);
        CHECK(s.segment(Modality::Eye).samples() == 600);
        CHECK(s.arousal == recs[0].arousal);
        CHECK(s.subject_id == recs[0].subject_id);
    }
    auto bad = bytes;
    bad.resize(bytes.size() - 3);
    CHECK_THROWS_AS(data::decode_raw(bad), phemonet::FormatError);
}

TEST_CASE("task and class names") {
    CHECK(data::parse_task("valence") == data::Task::Valence);
    CHECK_THROWS_AS(data::parse_task("dominance"), phemonet::ConfigError);
    CHECK(data::class_name(data::Task::Arousal, 0) == "calm");
    CHECK(data::class_name(data::Task::Arousal, 1) == "medium aroused");
    CHECK(data::class_name(data::Task::Arousal, 2) == "excited");
    CHECK(data::class_name(data::Task::Valence, 0) == "unpleasant");
    CHECK(data::class_name(data::Task::Valence, 2) == "pleasant");
}
