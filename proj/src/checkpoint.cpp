#include "phemonet/checkpoint.hpp"

#include <string>

#include "binary_io.hpp"
#include "phemonet/errors.hpp"

namespace phemonet::network {

namespace {

constexpr std::string_view kMagic = "PHEM";
constexpr std::uint8_t kClassifierId = 0xFF;

struct LayerShape {
    std::uint8_t id;
    std::uint32_t n;
    std::uint32_t d_in;
    std::uint32_t d_out;

    bool operator==(const LayerShape&) const = default;
};

std::vector<LayerShape> shape_table(const ModelParams& model) {
    std::vector<LayerShape> table;
    std::uint8_t id = 0;
    auto add = [&](const phm::PhmLayer& l) {
        table.push_back({id++, static_cast<std::uint32_t>(l.n), static_cast<std::uint32_t>(l.d_in),
                         static_cast<std::uint32_t>(l.d_out)});
    };
    for (const auto& e : model.encoders) add(e.phm);
    for (const auto& f : model.fusion) add(f.phm);
    table.push_back({kClassifierId, 0, static_cast<std::uint32_t>(model.classifier.W.cols()),
                     static_cast<std::uint32_t>(model.classifier.W.rows())});
    return table;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& model) {
    detail::ByteWriter w;
    const auto& c = model.config;
    w.bytes(kMagic);
    w.u16(kCheckpointVersion);

    w.f64(c.dropout);
    w.f64(c.bn_momentum);
    w.f64(c.bn_eps);
    w.u8(static_cast<std::uint8_t>(c.order));
    w.u32(static_cast<std::uint32_t>(c.fusion_n));
    w.u32(static_cast<std::uint32_t>(c.fusion_layers));
    w.u32(static_cast<std::uint32_t>(c.num_classes));
    w.u8(static_cast<std::uint8_t>(c.init_scheme.size()));
    w.bytes(c.init_scheme);

    w.u8(static_cast<std::uint8_t>(c.specs.size()));
    for (const auto& s : c.specs) {
        w.u8(static_cast<std::uint8_t>(s.modality));
        w.u32(static_cast<std::uint32_t>(s.n));
        w.u32(static_cast<std::uint32_t>(s.channels));
        w.u32(static_cast<std::uint32_t>(s.samples_per_segment));
        w.u32(static_cast<std::uint32_t>(s.hidden));
    }

    const auto table = shape_table(model);
    w.u32(static_cast<std::uint32_t>(table.size()));
    for (const auto& l : table) {
        w.u8(l.id);
        w.u32(l.n);
        w.u32(l.d_in);
        w.u32(l.d_out);
    }

    for (const auto& g : parameter_groups(model))
        for (double v : g.values) w.f64(v);
    return std::move(w).take();
}

ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    r.expect_magic(kMagic, "checkpoint");
    const std::size_t version_at = r.offset();
    const auto version = r.u16("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
    }

    ModelConfig c;
    c.dropout = r.f64("dropout");
    c.bn_momentum = r.f64("batchnorm momentum");
    c.bn_eps = r.f64("batchnorm eps");
    const std::size_t order_at = r.offset();
    const auto order = r.u8("block order");
    if (order > static_cast<std::uint8_t>(BlockOrder::ReluThenNorm)) {
        throw FormatError("invalid block order " + std::to_string(order), order_at);
    }
    c.order = static_cast<BlockOrder>(order);
    c.fusion_n = r.u32("fusion n");
    c.fusion_layers = r.u32("fusion layer count");
    c.num_classes = r.u32("class count");
    c.init_scheme = r.string(r.u8("scheme length"), "scheme name");

    const std::size_t specs_at = r.offset();
    const auto spec_count = r.u8("modality count");
    if (spec_count != kModalityCount) {
        throw FormatError("expected " + std::to_string(kModalityCount) + " modalities, found " + std::to_string(spec_count),
                          specs_at);
    }
    for (std::size_t i = 0; i < spec_count; ++i) {
        const std::size_t at = r.offset();
        const auto id = r.u8("modality id");
        if (id >= kModalityCount) throw FormatError("invalid modality id " + std::to_string(id), at);
        ModalitySpec s;
        s.modality = static_cast<Modality>(id);
        s.n = r.u32("modality n");
        s.channels = r.u32("modality channels");
        s.samples_per_segment = r.u32("modality samples");
        s.hidden = r.u32("modality hidden");
        c.specs.push_back(s);
    }

    ModelParams model;
    try {
        model = build_model(c, 0);
    } catch (const Error& e) {
        throw FormatError(std::string("inconsistent model configuration: ") + e.what(), specs_at);
    }

    const auto expected = shape_table(model);
    const std::size_t table_at = r.offset();
    const auto layer_count = r.u32("layer count");
    if (layer_count != expected.size()) {
        throw FormatError("shape table lists " + std::to_string(layer_count) + " layers, configuration implies " +
                              std::to_string(expected.size()),
                          table_at);
    }
    for (const auto& want : expected) {
        const std::size_t at = r.offset();
        LayerShape got{};
        got.id = r.u8("layer id");
        got.n = r.u32("layer n");
        got.d_in = r.u32("layer d_in");
        got.d_out = r.u32("layer d_out");
        if (!(got == want)) throw FormatError("shape table entry disagrees with configuration", at);
    }

    const std::size_t total = element_count(model);
    r.need_elements(total, sizeof(double), "parameter payload");
    for (auto& g : parameter_groups(model))
        for (double& v : g.values) v = r.f64("parameter");
    if (!r.at_end()) throw FormatError("trailing bytes after parameter payload", r.offset());
    return model;
}

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
    detail::write_file(path, encode_checkpoint(model));
}

ModelParams load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace phemonet::network
