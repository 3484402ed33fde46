#pragma once

#include <filesystem>
#include <span>

#include "t4c/grid.hpp"

namespace t4c {

enum class MaskProvenance { OrganizerStatic, Train2019, TrainPlusTest };

const char* provenance_name(MaskProvenance p) noexcept;
MaskProvenance parse_provenance(const std::string& name);

// H x W u8 grid of {0, 1}: 1 where any frame ever carried traffic.
struct RoadMask {
    Tensor grid;
    MaskProvenance provenance = MaskProvenance::Train2019;

    std::size_t height() const { return grid.dim(0); }
    std::size_t width() const { return grid.dim(1); }
    std::size_t road_pixels() const;
};

RoadMask build_mask(std::span<const TrafficMovie> movies, MaskProvenance provenance = MaskProvenance::Train2019);

// Same rule over arbitrary stacks [..., H, W] (movies, model inputs, input
// sets). Every tensor must share the trailing H x W.
RoadMask build_mask_from_tensors(std::span<const Tensor> stacks,
                                 MaskProvenance provenance = MaskProvenance::Train2019);

RoadMask union_masks(const RoadMask& a, const RoadMask& b);

// Zeroes every element whose (h, w) is off-road, broadcasting the mask over
// all leading axes. Preserves dtype.
Tensor apply_mask(const Tensor& t, const RoadMask& mask);
PredictionSet apply_mask(const PredictionSet& pred, const RoadMask& mask);

// Reads an [H, W] u8 T4GR file; any nonzero value becomes 1.
RoadMask import_external_mask(const std::filesystem::path& path);
void export_mask(const RoadMask& mask, const std::filesystem::path& path);

}  // namespace t4c
