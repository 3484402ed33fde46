#include "t4c/roadmap.hpp"

#include <algorithm>

#include "t4c/error.hpp"
#include "t4c/tensorio.hpp"

namespace t4c {

const char* provenance_name(MaskProvenance p) noexcept {
    switch (p) {
        case MaskProvenance::OrganizerStatic:
            return "organizer_static";
        case MaskProvenance::Train2019:
            return "train_2019";
        case MaskProvenance::TrainPlusTest:
            return "train_plus_test";
    }
    return "?";
}

MaskProvenance parse_provenance(const std::string& name) {
    for (auto p : {MaskProvenance::OrganizerStatic, MaskProvenance::Train2019, MaskProvenance::TrainPlusTest})
        if (name == provenance_name(p)) return p;
    throw ConfigError("unknown mask provenance '" + name + "'");
}

std::size_t RoadMask::road_pixels() const {
    auto g = grid.u8();
    return static_cast<std::size_t>(std::count(g.begin(), g.end(), std::uint8_t{1}));
}

namespace {

void check_mask(const RoadMask& m) {
    if (m.grid.rank() != 2 || m.grid.dtype() != DType::U8)
        throw ShapeError("road mask must be a [H, W] u8 grid, got " + format_dims(m.grid.dims()));
}

void check_spatial(const Tensor& t, const RoadMask& m) {
    check_mask(m);
    const auto& d = t.dims();
    if (d.size() < 2 || d[d.size() - 2] != m.height() || d[d.size() - 1] != m.width())
        throw ShapeError("mask " + format_dims(m.grid.dims()) + " does not match spatial dims of " + format_dims(d));
}

}  // namespace

RoadMask build_mask_from_tensors(std::span<const Tensor> stacks, MaskProvenance provenance) {
    if (stacks.empty()) throw ConfigError("build_mask needs at least one movie");
    const auto& first = stacks.front().dims();
    if (first.size() < 2) throw ShapeError("mask source must have trailing [H, W], got " + format_dims(first));
    const std::size_t h = first[first.size() - 2];
    const std::size_t w = first[first.size() - 1];
    const std::size_t plane = h * w;

    std::vector<std::uint8_t> grid(plane, 0);
    for (const auto& t : stacks) {
        const auto& d = t.dims();
        if (d.size() < 2 || d[d.size() - 2] != h || d[d.size() - 1] != w)
            throw ShapeError("mask source " + format_dims(d) + " does not share spatial dims with " + format_dims(first));
        const std::size_t planes = plane == 0 ? 0 : t.size() / plane;
        auto accumulate = [&](auto src) {
            for (std::size_t p = 0; p < planes; ++p) {
                const auto* row = src.data() + p * plane;
                for (std::size_t i = 0; i < plane; ++i) grid[i] |= row[i] > 0 ? 1 : 0;
            }
        };
        if (t.dtype() == DType::U8)
            accumulate(t.u8());
        else
            accumulate(t.f32());
    }
    return {Tensor({h, w}, std::move(grid)), provenance};
}

RoadMask build_mask(std::span<const TrafficMovie> movies, MaskProvenance provenance) {
    if (movies.empty()) throw ConfigError("build_mask needs at least one movie");
    std::vector<Tensor> frames;
    frames.reserve(movies.size());
    for (const auto& m : movies) {
        m.validate();
        if (m.spec.channels != movies.front().spec.channels || m.spec.height != movies.front().spec.height ||
            m.spec.width != movies.front().spec.width)
            throw ShapeError("movie '" + m.city + "' grid differs from movie '" + movies.front().city + "'");
        frames.push_back(m.frames);
    }
    return build_mask_from_tensors(frames, provenance);
}

RoadMask union_masks(const RoadMask& a, const RoadMask& b) {
    check_mask(a);
    check_mask(b);
    if (a.grid.dims() != b.grid.dims())
        throw ShapeError("mask union: " + format_dims(a.grid.dims()) + " vs " + format_dims(b.grid.dims()));
    auto x = a.grid.u8();
    auto y = b.grid.u8();
    std::vector<std::uint8_t> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x[i] | y[i]) ? 1 : 0;
    return {Tensor(a.grid.dims(), std::move(out)), MaskProvenance::TrainPlusTest};
}

Tensor apply_mask(const Tensor& t, const RoadMask& mask) {
    check_spatial(t, mask);
    const auto m = mask.grid.u8();
    const std::size_t plane = m.size();
    const std::size_t planes = plane == 0 ? 0 : t.size() / plane;
    if (t.dtype() == DType::U8) {
        auto src = t.u8();
        std::vector<std::uint8_t> out(src.begin(), src.end());
        for (std::size_t p = 0; p < planes; ++p)
            for (std::size_t i = 0; i < plane; ++i)
                if (!m[i]) out[p * plane + i] = 0;
        return Tensor(t.dims(), std::move(out));
    }
    auto src = t.f32();
    std::vector<float> out(src.begin(), src.end());
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < plane; ++i)
            if (!m[i]) out[p * plane + i] = 0.0f;
    return Tensor(t.dims(), std::move(out));
}

PredictionSet apply_mask(const PredictionSet& pred, const RoadMask& mask) {
    pred.validate();
    PredictionSet out = pred;
    out.values = apply_mask(pred.values, mask);
    return out;
}

RoadMask import_external_mask(const std::filesystem::path& path) {
    const auto t = read_tensor(path);
    if (t.rank() != 2 || t.dtype() != DType::U8)
        throw FormatError(path.string() + ": mask must be a [H, W] u8 tensor, got " + format_dims(t.dims()) + " " +
                          dtype_name(t.dtype()));
    auto src = t.u8();
    std::vector<std::uint8_t> grid(src.size());
    std::transform(src.begin(), src.end(), grid.begin(), [](std::uint8_t v) { return v ? 1 : 0; });
    return {Tensor(t.dims(), std::move(grid)), MaskProvenance::OrganizerStatic};
}

void export_mask(const RoadMask& mask, const std::filesystem::path& path) {
    check_mask(mask);
    write_tensor(mask.grid, path);
}

}  // namespace t4c
