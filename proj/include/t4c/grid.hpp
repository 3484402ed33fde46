#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t4c/tensor.hpp"

namespace t4c {

// Forecast horizons in 5-minute bins past the last input frame:
// 5, 10, 15, 30, 45 and 60 minutes.
inline constexpr std::size_t kTargetOffsets[] = {1, 2, 3, 6, 9, 12};

struct GridSpec {
    std::size_t height = 495;
    std::size_t width = 436;
    std::size_t channels = 8;
    std::size_t t_in = 12;
    std::size_t t_out = 6;

    void validate() const;
    std::size_t input_channels() const noexcept { return t_in * channels; }
    std::size_t output_channels() const noexcept { return t_out * channels; }
    std::size_t frame_size() const noexcept { return channels * height * width; }

    bool operator==(const GridSpec&) const = default;
};

// One city's traffic history, frames laid out [T, C, H, W] as u8.
struct TrafficMovie {
    GridSpec spec;
    Tensor frames;
    std::string city;
    std::vector<std::int64_t> frame_ids;

    // Checks dims against spec and strict monotonicity of frame_ids.
    void validate() const;
    std::size_t frame_count() const noexcept { return frame_ids.size(); }

    // Movie over a [T, C, H, W] u8 tensor with contiguous ids 0..T-1.
    static TrafficMovie from_frames(Tensor frames, std::string city, GridSpec base = {});
};

// Loads a [T, C, H, W] u8 T4GR movie. Frame ids come from an optional
// "<path>.ids" sidecar (whitespace-separated integers), else 0..T-1.
TrafficMovie load_movie(const std::filesystem::path& path, std::string city, GridSpec base = {});

// N slots of stacked per-slot tensors [N, K, H, W]. Used for model inputs
// (K = t_in * C) and for predictions/targets (K = t_out * C).
struct SlotSet {
    GridSpec spec;
    std::vector<std::string> slots;
    Tensor values;

    std::size_t slot_count() const noexcept { return slots.size(); }
    Tensor slot(std::size_t i) const { return slice0(values, i); }
};

struct PredictionSet : SlotSet {
    void validate() const;
};

struct InputSet : SlotSet {
    void validate() const;
};

// Assembles a set from per-slot tensors. Mixed dtypes are promoted to f32.
PredictionSet make_prediction_set(const GridSpec& spec, std::vector<std::string> slots,
                                  std::span<const Tensor> per_slot);
InputSet make_input_set(const GridSpec& spec, std::vector<std::string> slots, std::span<const Tensor> per_slot);

// Directory of "<slot_id>.t4gr" files. Slots are sorted lexicographically;
// files not ending in .t4gr are ignored. Per-slot tensors may be stored
// [K, H, W] or [T, C, H, W].
std::vector<std::string> list_slots(const std::filesystem::path& dir);
InputSet load_input_dir(const std::filesystem::path& dir, const GridSpec& base);
PredictionSet load_prediction_dir(const std::filesystem::path& dir, const GridSpec& base);
void write_slot_dir(const SlotSet& set, const std::filesystem::path& dir);

// Single-file form: one [N, K, H, W] tensor, slots named "0".."N-1".
PredictionSet prediction_set_from_tensor(const Tensor& t, const GridSpec& base);

// Throws AlignmentError naming diverging slots.
void require_same_slots(const SlotSet& a, const SlotSet& b, const std::string& context);

}  // namespace t4c
