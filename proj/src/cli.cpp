#include "phemonet/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "phemonet/checkpoint.hpp"
#include "phemonet/data.hpp"
#include "phemonet/errors.hpp"
#include "phemonet/gradcheck.hpp"
#include "phemonet/network.hpp"
#include "phemonet/training.hpp"

namespace phemonet::cli {

namespace {

/// Signals a failed verification (gradcheck) rather than an error.
struct VerificationFailure {};

struct SynthArgs {
    std::size_t per_class = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t eye_rate = network::kDefaultEyeRate;
    double noise = 1.0;
    bool raw = false;
    double raw_seconds = 30.0;
};

struct PreprocessArgs {
    std::string in;
    std::string out;
    double segment_seconds = network::kSegmentSeconds;
};

struct SplitArgs {
    double train_fraction = 0.8;
    std::string split_mode = "stratified";
};

struct ModelArgs {
    std::string block_order = "bn_relu";
    double dropout = 0.5;
};

struct TrainArgs {
    std::string task;
    std::string data;
    std::uint64_t seed = 0;
    std::string out = "model.phem";
    std::string history = "history.csv";
    std::string report;
    training::TrainConfig cfg;
    double lr_multiplier = 1.0;
    SplitArgs split;
    ModelArgs model;
    bool no_augment = false;
    sigproc::AugmentOptions augment;
};

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string task;
    std::string split = "all";
    std::uint64_t seed = 0;
    SplitArgs split_args;
};

struct GradcheckArgs {
    std::uint64_t seed = 7;
    double eps = kDefaultGradEps;
    bool corrupt_backward = false;
};

struct InspectArgs {
    std::string path;
};

// Stream ids used to derive independent seeds from --seed.
enum SeedStream : std::uint64_t { kSplitStream = 1, kAugmentStream = 2, kInitStream = 3, kTrainStream = 4 };

void add_split_options(CLI::App* cmd, SplitArgs& a) {
    cmd->add_option("--train-fraction", a.train_fraction, "Fraction of each class used for training")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--split-mode", a.split_mode, "stratified (by label) or subject (whole subjects)")
        ->check(CLI::IsMember({"stratified", "subject"}))
        ->capture_default_str();
}

std::string g(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void echo(std::ostream& out, const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
    out << "# " << command << " configuration\n";
    for (const auto& [k, v] : kv) out << "#   " << k << " = " << v << "\n";
}

std::string counts_line(const std::vector<data::Sample>& samples, data::Task task) {
    const auto c = data::class_counts(samples, task);
    std::string s;
    for (std::size_t k = 0; k < c.size(); ++k) {
        s += (k ? ", " : "") + std::string(data::class_name(task, k)) + "=" + std::to_string(c[k]);
    }
    return s;
}

void run_synth(const SynthArgs& a, std::ostream& out) {
    echo(out, "synth",
         {{"per_class", std::to_string(a.per_class)},
          {"seed", std::to_string(a.seed)},
          {"eye_rate", std::to_string(a.eye_rate)},
          {"noise", g(a.noise)},
          {"raw", a.raw ? "true" : "false"},
          {"out", a.out}});
    if (a.raw) {
        const auto recs = data::generate_synthetic_raw(a.per_class, a.seed, a.eye_rate, a.raw_seconds);
        data::write_raw(recs, a.out);
        out << "wrote " << recs.size() << " raw recordings to " << a.out << "\n";
        return;
    }
    data::SynthOptions opts;
    opts.eye_rate = a.eye_rate;
    opts.noise_level = a.noise;
    const auto ds = data::generate_synthetic(a.per_class, a.seed, opts);
    data::write_dataset(ds, a.out);
    out << "wrote " << ds.samples.size() << " samples to " << a.out << "\n";
    out << "arousal counts: " << counts_line(ds.samples, data::Task::Arousal) << "\n";
    out << "valence counts: " << counts_line(ds.samples, data::Task::Valence) << "\n";
}

void run_preprocess(const PreprocessArgs& a, std::ostream& out) {
    echo(out, "preprocess", {{"in", a.in}, {"out", a.out}, {"segment_seconds", g(a.segment_seconds)}});
    for (auto m : network::kModalityOrder) {
        out << "#   pipeline." << network::modality_name(m) << " = "
            << sigproc::describe_pipeline(sigproc::modality_pipeline(m)) << "\n";
    }
    const auto recs = data::read_raw(a.in);
    data::Dataset ds;
    bool have_rate = false;
    for (const auto& rec : recs) {
        const auto eye_rate = static_cast<std::uint16_t>(std::llround(rec.eye_left.sample_rate));
        if (have_rate && eye_rate != ds.eye_rate) throw DataError("recordings disagree on the eye-tracker rate");
        ds.eye_rate = eye_rate;
        have_rate = true;
        auto samples = data::preprocess_recording(rec, a.segment_seconds);
        for (auto& s : samples) ds.samples.push_back(std::move(s));
    }
    data::write_dataset(ds, a.out);
    out << "processed " << recs.size() << " recordings into " << ds.samples.size() << " samples ("
        << network::kSignalRate << " Hz signals, eye " << ds.eye_rate << " Hz) -> " << a.out << "\n";
}

network::ModelConfig model_config(const data::Dataset& ds, const ModelArgs& m) {
    auto config = data::config_for(ds);
    config.order = network::parse_block_order(m.block_order);
    config.dropout = m.dropout;
    return config;
}

void run_train(TrainArgs a, std::ostream& out) {
    a.cfg.task = data::parse_task(a.task);
    a.cfg.seed = a.seed;
    a.cfg.max_lr *= a.lr_multiplier;
    training::validate(a.cfg);
    const auto& c = a.cfg;
    echo(out, "train",
         {{"task", a.task},
          {"data", a.data},
          {"seed", std::to_string(a.seed)},
          {"epochs", std::to_string(c.epochs)},
          {"patience", std::to_string(c.patience)},
          {"max_lr", g(c.max_lr) + " (base " + g(c.max_lr / a.lr_multiplier) + " x " + g(a.lr_multiplier) + ")"},
          {"div_factor", g(c.div_factor)},
          {"final_div_factor", g(c.final_div_factor)},
          {"pct_increase", g(c.pct_increase)},
          {"momentum_max", g(c.momentum_max)},
          {"momentum_min", g(c.momentum_min)},
          {"anneal", "linear"},
          {"batch_size", std::to_string(c.batch_size)},
          {"beta2", g(c.beta2)},
          {"adam_eps", g(c.adam_eps)},
          {"train_fraction", g(a.split.train_fraction)},
          {"split_mode", a.split.split_mode},
          {"augment", a.no_augment ? "off" : "on"},
          {"noise_ratio", g(a.augment.noise_sigma_ratio)},
          {"scale_range", g(a.augment.scale_lo) + ".." + g(a.augment.scale_hi)},
          {"block_order", a.model.block_order},
          {"dropout", g(a.model.dropout)}});

    const auto ds = data::read_dataset(a.data);
    const auto config = model_config(ds, a.model);
    data::validate_against(ds.samples, network::ModelConfig(config));
    const auto split = data::stratified_split(ds.samples, c.task, a.split.train_fraction, mix_seed(a.seed, kSplitStream),
                                              data::parse_split_mode(a.split.split_mode));
    auto train_set = data::gather(ds.samples, split.train);
    const auto val_set = data::gather(ds.samples, split.test);
    out << "split: train " << train_set.size() << " [" << counts_line(train_set, c.task) << "], test " << val_set.size()
        << " [" << counts_line(val_set, c.task) << "]\n";
    if (!a.no_augment) {
        Rng aug_rng(mix_seed(a.seed, kAugmentStream));
        train_set = data::augment_samples(train_set, aug_rng, a.augment);
        out << "augmented training set: " << train_set.size() << " samples\n";
    }

    auto model = network::build_model(config, mix_seed(a.seed, kInitStream));
    out << "model: " << network::trainable_count(model) << " trainable parameters\n";
    Rng rng(mix_seed(a.seed, kTrainStream));
    const auto result = training::train(std::move(model), train_set, val_set, c, rng);

    for (const auto& h : result.history) {
        out << "epoch " << h.epoch << " loss " << g(h.train_loss) << " lr " << g(h.lr) << " val_acc "
            << g(h.val_accuracy) << " val_f1 " << g(h.val_f1) << "\n";
    }
    network::save_checkpoint(result.best, a.out);
    std::ofstream(a.history) << training::history_csv(result.history);
    const std::string report = training::format_report(result.best_report, c.task);
    if (!a.report.empty()) std::ofstream(a.report) << report;
    out << "best epoch " << result.best_epoch << " of " << result.history.size() << "\n" << report;
    out << "wrote checkpoint " << a.out << " and history " << a.history << "\n";
}

void run_eval(const EvalArgs& a, std::ostream& out) {
    echo(out, "eval",
         {{"checkpoint", a.checkpoint},
          {"data", a.data},
          {"task", a.task},
          {"split", a.split},
          {"seed", std::to_string(a.seed)},
          {"train_fraction", g(a.split_args.train_fraction)},
          {"split_mode", a.split_args.split_mode}});
    const auto task = data::parse_task(a.task);
    const auto model = network::load_checkpoint(a.checkpoint);
    const auto ds = data::read_dataset(a.data);
    try {
        data::validate_against(ds.samples, model.config);
    } catch (const ShapeError& e) {
        throw FormatError(std::string("checkpoint does not fit the dataset: ") + e.what(), 0);
    }
    std::vector<data::Sample> samples;
    if (a.split == "all") {
        samples = ds.samples;
    } else {
        const auto split = data::stratified_split(ds.samples, task, a.split_args.train_fraction,
                                                  mix_seed(a.seed, kSplitStream),
                                                  data::parse_split_mode(a.split_args.split_mode));
        samples = data::gather(ds.samples, a.split == "train" ? split.train : split.test);
    }
    const auto report = training::evaluate(model, samples, task);
    out << "samples: " << samples.size() << "\n" << training::format_report(report, task);
}

void run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    echo(out, "gradcheck",
         {{"seed", std::to_string(a.seed)}, {"eps", g(a.eps)}, {"tolerance", g(gradcheck::kTolerance)}});
    gradcheck::Options opts;
    opts.seed = a.seed;
    opts.eps = a.eps;
    opts.corrupt_backward = a.corrupt_backward;
    const auto phm_report = gradcheck::phm_suite(opts);
    const auto net_report = gradcheck::network_suite(opts);
    bool ok = true;
    out << "layer,parameters,max_rel_error,status\n";
    for (const auto* rep : {&phm_report, &net_report}) {
        for (const auto& row : rep->layers) {
            const bool pass = row.max_rel_error < gradcheck::kTolerance;
            ok = ok && pass;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3e", row.max_rel_error);
            out << row.name << "," << row.count << "," << buf << "," << (pass ? "ok" : "FAIL") << "\n";
        }
    }
    out << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
    if (!ok) throw VerificationFailure{};
}

void run_inspect(const InspectArgs& a, std::ostream& out) {
    const auto bytes = detail::read_file(a.path);
    const std::string magic(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, bytes.size())));
    if (magic == "PHDS") {
        const auto ds = data::decode_dataset(bytes);
        out << "dataset " << a.path << ": " << ds.samples.size() << " samples, eye rate " << ds.eye_rate << " Hz\n";
        if (!ds.samples.empty()) {
            for (auto m : network::kModalityOrder) {
                const auto& seg = ds.samples.front().segment(m);
                out << "  " << network::modality_name(m) << ": " << seg.channels() << " channels x " << seg.samples()
                    << " samples @ " << seg.sample_rate << " Hz\n";
            }
            out << "  arousal: " << counts_line(ds.samples, data::Task::Arousal) << "\n";
            out << "  valence: " << counts_line(ds.samples, data::Task::Valence) << "\n";
        }
    } else if (magic == "PHEM") {
        const auto model = network::decode_checkpoint(bytes);
        out << "checkpoint " << a.path << ": " << network::element_count(model) << " stored values, "
            << network::trainable_count(model) << " trainable\n";
        for (const auto& b : model.encoders) {
            out << "  encoder n=" << b.phm.n << " " << b.phm.d_in << "->" << b.phm.d_out << " ("
                << phm::param_count(b.phm.n, b.phm.d_in, b.phm.d_out) << " PHM parameters)\n";
        }
        for (const auto& b : model.fusion) {
            out << "  fusion n=" << b.phm.n << " " << b.phm.d_in << "->" << b.phm.d_out << " ("
                << phm::param_count(b.phm.n, b.phm.d_in, b.phm.d_out) << " PHM parameters)\n";
        }
        out << "  classifier " << model.classifier.W.cols() << "->" << model.classifier.W.rows() << "\n";
    } else if (magic == "PHDR") {
        const auto recs = data::decode_raw(bytes);
        out << "raw recordings " << a.path << ": " << recs.size() << "\n";
        if (!recs.empty()) {
            const auto& r = recs.front();
            out << "  eeg: " << r.eeg.channels() << " channels @ " << r.eeg.sample_rate << " Hz, " << r.eeg.samples()
                << " samples\n";
        }
    } else {
        throw FormatError("unrecognized file magic", 0);
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"phemonet: parameterized hypercomplex multimodal classifier for physiological signals", "phemonet"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key = value file (flags override it)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--per-class", synth.per_class, "Samples per class")->required()->check(CLI::Range(1, 1000000));
    synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("-o,--out", synth.out, "Output file")->required();
    synth_cmd->add_option("--eye-rate", synth.eye_rate, "Eye-tracker rate in Hz")->check(CLI::Range(1, 65535))->capture_default_str();
    synth_cmd->add_option("--noise", synth.noise, "Noise level relative to the class signatures")->check(CLI::NonNegativeNumber)->capture_default_str();
    synth_cmd->add_flag("--raw", synth.raw, "Emit unprocessed 30 s recordings (PHDR) for `preprocess`");
    synth_cmd->add_option("--raw-seconds", synth.raw_seconds, "Length of raw recordings")->check(CLI::PositiveNumber)->capture_default_str();

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "Filter, resample and segment raw recordings");
    pre_cmd->add_option("-i,--in", pre.in, "Raw recordings (PHDR)")->required();
    pre_cmd->add_option("-o,--out", pre.out, "Processed dataset (PHDS)")->required();
    pre_cmd->add_option("--segment-seconds", pre.segment_seconds, "Segment length")->check(CLI::PositiveNumber)->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train one model for one task");
    train_cmd->add_option("--task", tr.task, "arousal or valence")->required()->check(CLI::IsMember({"arousal", "valence"}));
    train_cmd->add_option("--data", tr.data, "Dataset (PHDS)")->required();
    train_cmd->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
    train_cmd->add_option("-o,--out", tr.out, "Checkpoint path")->capture_default_str();
    train_cmd->add_option("--history", tr.history, "History CSV path")->capture_default_str();
    train_cmd->add_option("--report", tr.report, "Also write the final report here");
    train_cmd->add_option("--epochs", tr.cfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--patience", tr.cfg.patience)->capture_default_str();
    train_cmd->add_option("--max-lr", tr.cfg.max_lr)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--lr-multiplier", tr.lr_multiplier, "Scales max-lr")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--div-factor", tr.cfg.div_factor)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--final-div-factor", tr.cfg.final_div_factor)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--pct-increase", tr.cfg.pct_increase)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    train_cmd->add_option("--momentum-max", tr.cfg.momentum_max)->capture_default_str();
    train_cmd->add_option("--momentum-min", tr.cfg.momentum_min)->capture_default_str();
    train_cmd->add_option("--batch-size", tr.cfg.batch_size)->check(CLI::Range(2, 1 << 20))->capture_default_str();
    add_split_options(train_cmd, tr.split);
    train_cmd->add_flag("--no-augment", tr.no_augment, "Disable noise/scaling augmentation of the training split");
    train_cmd->add_option("--noise-ratio", tr.augment.noise_sigma_ratio)->check(CLI::NonNegativeNumber)->capture_default_str();
    train_cmd->add_option("--scale-lo", tr.augment.scale_lo)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--scale-hi", tr.augment.scale_hi)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--block-order", tr.model.block_order, "bn_relu or relu_bn")
        ->check(CLI::IsMember({"bn_relu", "relu_bn"}))
        ->capture_default_str();
    train_cmd->add_option("--dropout", tr.model.dropout)->check(CLI::Range(0.0, 0.99))->capture_default_str();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint (PHEM)")->required();
    eval_cmd->add_option("--data", ev.data, "Dataset (PHDS)")->required();
    eval_cmd->add_option("--task", ev.task, "arousal or valence")->required()->check(CLI::IsMember({"arousal", "valence"}));
    eval_cmd->add_option("--split", ev.split, "all, train or test (reproduces the training split)")
        ->check(CLI::IsMember({"all", "train", "test"}))
        ->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Seed used for training (selects the split)")->capture_default_str();
    add_split_options(eval_cmd, ev.split_args);

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference verification of all analytic gradients");
    gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
    gc_cmd->add_option("--eps", gc.eps)->check(CLI::PositiveNumber)->capture_default_str();
    gc_cmd->add_flag("--corrupt-backward", gc.corrupt_backward, "Test hook: perturb analytic gradients")->group("");

    InspectArgs ins;
    auto* ins_cmd = app.add_subcommand("inspect", "Summarize a dataset, raw or checkpoint file");
    ins_cmd->add_option("path", ins.path)->required();

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back("phemonet");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_store) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth_cmd) run_synth(synth, out);
        if (*pre_cmd) run_preprocess(pre, out);
        if (*train_cmd) run_train(tr, out);
        if (*eval_cmd) run_eval(ev, out);
        if (*gc_cmd) run_gradcheck(gc, out);
        if (*ins_cmd) run_inspect(ins, out);
    } catch (const VerificationFailure&) {
        return kVerificationFailed;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kIoOrFormat;
    }
    return kOk;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace phemonet::cli
