#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "t4c/grid.hpp"

namespace t4c {

struct SampleIndex {
    std::string movie_id;
    std::size_t start_frame = 0;

    bool operator==(const SampleIndex&) const = default;
};

// Frames a sample spans, counted from start_frame: T_in inputs plus the
// furthest target offset.
std::size_t sample_span(const GridSpec& spec);

// Every start (stepping by `stride`) whose input window and six target frames
// lie on consecutive frame ids. Short movies yield an empty list.
std::vector<SampleIndex> enumerate_samples(const TrafficMovie& movie, std::size_t stride = 1,
                                           std::string movie_id = {});

struct TrainingPair {
    Tensor input;   // [T_in * C, H, W]
    Tensor target;  // [T_out * C, H, W]
};

TrainingPair extract_sample(const TrafficMovie& movie, const SampleIndex& s);

// Checks a pair against the model layout for `spec`; throws ShapeError.
void validate_training_pair(const TrainingPair& pair, const GridSpec& spec);

inline constexpr int kFoldCount = 4;

struct FoldSplit {
    std::vector<SampleIndex> samples;
    std::vector<int> fold_of_sample;  // parallel to samples
    int validation_fold = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_sizes() const;
    std::vector<SampleIndex> fold(int id) const;
    std::vector<SampleIndex> training() const;
    std::vector<SampleIndex> validation() const { return fold(validation_fold); }

    // One "movie_id start_frame fold" line per sample.
    std::string to_text() const;
    static FoldSplit from_text(const std::string& text, std::uint64_t seed = 0, int validation_fold = 0);

    bool operator==(const FoldSplit&) const = default;
};

// Seeded Fisher-Yates shuffle, then round-robin into four folds. The shuffle
// uses its own bounded draw so results do not depend on the standard
// library's distribution implementations.
FoldSplit make_folds(const std::vector<SampleIndex>& samples, std::uint64_t seed, int validation_fold = 0);

}  // namespace t4c
