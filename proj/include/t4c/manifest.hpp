#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "t4c/ensemble.hpp"
#include "t4c/grid.hpp"
#include "t4c/predictors.hpp"

namespace t4c {

// off: predict on raw inputs. on: lambda-scale inputs, unscale predictions.
// both: run both branches and average the two results.
enum class TdaMode { Off, On, Both };
enum class MaskSource { None, OrganizerStatic, Train2019, TrainPlusTest };

const char* tda_mode_name(TdaMode m) noexcept;
const char* mask_source_name(MaskSource m) noexcept;

struct CityConfig {
    std::string name;
    std::vector<std::filesystem::path> train;  // [T, C, H, W] u8 movies
    std::filesystem::path test_inputs;         // directory of <slot>.t4gr
    std::filesystem::path targets;             // optional, enables scoring
    std::filesystem::path mask;                // organizer mask, organizer_static only
    std::filesystem::path lambda;              // optional precomputed lambda map

    bool operator==(const CityConfig&) const = default;
};

// Line-oriented "key = value" text with [run] and [city <name>] sections.
// '#' starts a comment line. Relative paths resolve against the manifest's
// directory at run time.
struct PipelineManifest {
    std::filesystem::path output_dir = "out";
    std::size_t channels = 8;
    std::size_t t_in = 12;
    std::size_t t_out = 6;
    TdaMode tda = TdaMode::Off;
    bool quantize_u8 = false;
    MaskSource mask_source = MaskSource::Train2019;
    std::optional<Aggregator> ensemble;  // required with >= 2 predictors
    std::vector<PredictorSpec> predictors;
    std::uint64_t seed = 0;
    std::vector<CityConfig> cities;

    GridSpec grid() const;
    std::string to_text() const;
    static PipelineManifest parse(const std::string& text);
    static PipelineManifest load(const std::filesystem::path& path);

    bool operator==(const PipelineManifest&) const = default;
};

}  // namespace t4c
