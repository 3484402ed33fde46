#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "t4c/dataset.hpp"
#include "t4c/grid.hpp"
#include "t4c/tda.hpp"

namespace t4c {

enum class PredictorKind { Persistence, HistoricalMean, External };

const char* predictor_name(PredictorKind kind) noexcept;

struct PredictorSpec {
    PredictorKind kind = PredictorKind::Persistence;
    // External only: protocol directory and an optional shell command that
    // fills it. "{inputs}" and "{outputs}" in the command are substituted.
    std::filesystem::path protocol_dir;
    std::string command;

    bool operator==(const PredictorSpec&) const = default;
};

// "persistence", "historical_mean", "external:<dir>" or
// "external:<dir>|<command>".
PredictorSpec parse_predictor(const std::string& text);
std::string format_predictor(const PredictorSpec& spec);

// Repeats the last input frame for every output horizon. Keeps dtype.
Tensor predict_persistence(const Tensor& input, const GridSpec& spec);
PredictionSet predict_persistence(const InputSet& inputs);

// Every output frame equals the mean map; U8 rounds half-up.
Tensor predict_historical_mean(const MeanMap& mean, std::size_t t_out, Quantize mode = Quantize::None);
PredictionSet predict_historical_mean(const InputSet& inputs, const MeanMap& mean, Quantize mode = Quantize::None);

// Reads "<slot>.t4gr" for each expected slot from protocol_dir. Missing
// files raise one ProtocolError listing every missing slot; malformed files
// raise FormatError naming the file. Unrelated files are ignored.
PredictionSet run_external(const std::vector<std::string>& slots, const std::filesystem::path& protocol_dir,
                           const GridSpec& spec);

// Writes one "<slot>.t4gr" file per slot.
void write_protocol(const PredictionSet& pred, const std::filesystem::path& protocol_dir);

// Training pairs built from a model's own predictions on unlabeled inputs.
struct PseudoLabelSet {
    GridSpec spec;
    std::vector<std::string> slots;
    std::vector<TrainingPair> pairs;  // u8 input, u8 pseudo target
    std::string source_model;
};

// One pair per slot, in slot order. Predictions are clipped to [0, 255] and
// rounded half-up. Throws AlignmentError when slots differ.
PseudoLabelSet build_pseudo_labels(const InputSet& inputs, const PredictionSet& predictions,
                                   std::string source_model = {});

// Writes "<dir>/inputs/<slot>.t4gr" and "<dir>/targets/<slot>.t4gr".
void write_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& dir);

}  // namespace t4c
