#include "t4c/predictors.hpp"

#include "t4c/error.hpp"
#include "t4c/tensorio.hpp"

namespace fs = std::filesystem;

namespace t4c {

const char* predictor_name(PredictorKind kind) noexcept {
    switch (kind) {
        case PredictorKind::Persistence:
            return "persistence";
        case PredictorKind::HistoricalMean:
            return "historical_mean";
        case PredictorKind::External:
            return "external";
    }
    return "?";
}

PredictorSpec parse_predictor(const std::string& text) {
    if (text == "persistence") return {PredictorKind::Persistence, {}, {}};
    if (text == "historical_mean") return {PredictorKind::HistoricalMean, {}, {}};
    const std::string prefix = "external:";
    if (text.rfind(prefix, 0) == 0) {
        std::string rest = text.substr(prefix.size());
        PredictorSpec spec{PredictorKind::External, {}, {}};
        if (auto bar = rest.find('|'); bar != std::string::npos) {
            spec.command = rest.substr(bar + 1);
            rest.resize(bar);
        }
        if (rest.empty()) throw ConfigError("external predictor needs a protocol directory");
        spec.protocol_dir = rest;
        return spec;
    }
    throw ConfigError("unknown predictor '" + text + "'");
}

std::string format_predictor(const PredictorSpec& spec) {
    if (spec.kind != PredictorKind::External) return predictor_name(spec.kind);
    std::string s = "external:" + spec.protocol_dir.string();
    if (!spec.command.empty()) s += "|" + spec.command;
    return s;
}

Tensor predict_persistence(const Tensor& input, const GridSpec& spec) {
    const Dims expected{spec.input_channels(), spec.height, spec.width};
    if (input.dims() != expected)
        throw ShapeError("persistence input " + format_dims(input.dims()) + ", expected " + format_dims(expected));
    const std::size_t frame = spec.frame_size();
    const std::size_t last = (spec.t_in - 1) * frame;
    const Dims out_dims{spec.output_channels(), spec.height, spec.width};

    auto tile = [&](auto src) {
        using T = typename decltype(src)::value_type;
        std::vector<T> out;
        out.reserve(spec.t_out * frame);
        for (std::size_t k = 0; k < spec.t_out; ++k)
            out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(last), src.end());
        return Tensor(out_dims, std::move(out));
    };
    return input.dtype() == DType::U8 ? tile(input.u8()) : tile(input.f32());
}

PredictionSet predict_persistence(const InputSet& inputs) {
    inputs.validate();
    std::vector<Tensor> outs;
    outs.reserve(inputs.slot_count());
    for (std::size_t i = 0; i < inputs.slot_count(); ++i) outs.push_back(predict_persistence(inputs.slot(i), inputs.spec));
    return make_prediction_set(inputs.spec, inputs.slots, outs);
}

Tensor predict_historical_mean(const MeanMap& mean, std::size_t t_out, Quantize mode) {
    if (mean.values.rank() != 3) throw ShapeError("mean map must be [C, H, W], got " + format_dims(mean.values.dims()));
    if (t_out == 0) throw ConfigError("t_out must be >= 1");
    const auto& d = mean.values.dims();
    const Dims out_dims{t_out * d[0], d[1], d[2]};
    const Tensor values = mean.values.to_f32();
    const auto src = values.f32();
    if (mode == Quantize::U8) {
        std::vector<std::uint8_t> out;
        out.reserve(element_count(out_dims));
        for (std::size_t k = 0; k < t_out; ++k)
            for (float v : src) out.push_back(quantize_u8(v));
        return Tensor(out_dims, std::move(out));
    }
    std::vector<float> out;
    out.reserve(element_count(out_dims));
    for (std::size_t k = 0; k < t_out; ++k) out.insert(out.end(), src.begin(), src.end());
    return Tensor(out_dims, std::move(out));
}

PredictionSet predict_historical_mean(const InputSet& inputs, const MeanMap& mean, Quantize mode) {
    inputs.validate();
    if (mean.values.dims() != Dims{inputs.spec.channels, inputs.spec.height, inputs.spec.width})
        throw ShapeError("mean map " + format_dims(mean.values.dims()) + " does not match input grid");
    const Tensor frame = predict_historical_mean(mean, inputs.spec.t_out, mode);
    std::vector<Tensor> outs(inputs.slot_count(), frame);
    return make_prediction_set(inputs.spec, inputs.slots, outs);
}

PredictionSet run_external(const std::vector<std::string>& slots, const fs::path& protocol_dir, const GridSpec& spec) {
    if (slots.empty()) throw ConfigError("run_external needs at least one slot");
    if (!fs::is_directory(protocol_dir))
        throw ProtocolError("protocol directory '" + protocol_dir.string() + "' does not exist");
    std::string missing;
    for (const auto& id : slots)
        if (!fs::is_regular_file(protocol_dir / (id + ".t4gr"))) missing += (missing.empty() ? "" : ", ") + id;
    if (!missing.empty())
        throw ProtocolError("protocol directory '" + protocol_dir.string() + "' is missing slots: " + missing);

    const Dims expected{spec.output_channels(), spec.height, spec.width};
    std::vector<Tensor> parts;
    parts.reserve(slots.size());
    for (const auto& id : slots) {
        const auto file = protocol_dir / (id + ".t4gr");
        auto t = read_tensor(file);
        if (t.rank() == 4) t = reshape_for_model(t);
        if (t.dims() != expected)
            throw FormatError(file.string() + ": dims " + format_dims(t.dims()) + ", expected " + format_dims(expected));
        parts.push_back(std::move(t));
    }
    return make_prediction_set(spec, slots, parts);
}

void write_protocol(const PredictionSet& pred, const fs::path& protocol_dir) {
    pred.validate();
    write_slot_dir(pred, protocol_dir);
}

PseudoLabelSet build_pseudo_labels(const InputSet& inputs, const PredictionSet& predictions, std::string source_model) {
    inputs.validate();
    predictions.validate();
    require_same_slots(inputs, predictions, "pseudo-labels");
    if (inputs.spec != predictions.spec) throw AlignmentError("pseudo-labels: input and prediction grids differ");
    PseudoLabelSet out{inputs.spec, inputs.slots, {}, std::move(source_model)};
    out.pairs.reserve(inputs.slot_count());
    for (std::size_t i = 0; i < inputs.slot_count(); ++i)
        out.pairs.push_back({inputs.slot(i).to_u8(), predictions.slot(i).to_u8()});
    return out;
}

void write_pseudo_labels(const PseudoLabelSet& set, const fs::path& dir) {
    fs::create_directories(dir / "inputs");
    fs::create_directories(dir / "targets");
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        write_tensor(set.pairs[i].input, dir / "inputs" / (set.slots[i] + ".t4gr"));
        write_tensor(set.pairs[i].target, dir / "targets" / (set.slots[i] + ".t4gr"));
    }
}

}  // namespace t4c
