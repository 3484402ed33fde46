#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "t4c/evaluate.hpp"
#include "t4c/manifest.hpp"

namespace t4c {

// One invocation of an external predictor: read model inputs from
// inputs_dir, leave "<slot>.t4gr" predictions in protocol_dir.
struct ExternalCall {
    std::string city;
    std::string branch;  // "plain" or "tda"
    std::filesystem::path inputs_dir;
    std::filesystem::path protocol_dir;
    std::string command;
};

using ExternalRunner = std::function<void(const ExternalCall&)>;

// Runs call.command through the shell after substituting {inputs},
// {outputs} and {city}. An empty command means predictions already exist.
void run_external_command(const ExternalCall& call);

struct PipelineOptions {
    std::filesystem::path base_dir = ".";
    std::ostream* log = nullptr;
    ExternalRunner external_runner = run_external_command;
};

struct ArtifactRecord {
    std::string stage;
    std::string path;  // relative to the output directory
    std::string digest;

    bool operator==(const ArtifactRecord&) const = default;
};

struct PipelineResult {
    std::optional<ScoreReport> report;
    std::vector<ArtifactRecord> artifacts;
    std::map<std::string, PredictionSet> final_predictions;
};

// Human-readable stage list; touches no files.
std::vector<std::string> plan_pipeline(const PipelineManifest& m);

// Checks the manifest and that every referenced input exists. Throws one
// ConfigError listing all problems.
void validate_manifest(const PipelineManifest& m, const std::filesystem::path& base_dir);

// Stage order per city: mask -> folds -> lambda fit -> lambda apply ->
// predict -> lambda invert -> mask apply -> ensemble -> combine, then score.
// Every artifact is written as "<name>.partial" and renamed once complete;
// failures raise StageError and leave the partial file behind.
PipelineResult run_pipeline(const PipelineManifest& m, const PipelineOptions& options = {});

}  // namespace t4c
