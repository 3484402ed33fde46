#include "t4c/grid.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "t4c/error.hpp"
#include "t4c/tensorio.hpp"

namespace fs = std::filesystem;

namespace t4c {

void GridSpec::validate() const {
    if (height < 1 || width < 1 || channels < 1 || t_in < 1 || t_out < 1)
        throw ConfigError("grid spec fields must all be >= 1");
    if (channels % 2 != 0)
        throw ConfigError("channel count must be even (volume/speed pairs), got " + std::to_string(channels));
}

void TrafficMovie::validate() const {
    spec.validate();
    const Dims expected{frame_ids.size(), spec.channels, spec.height, spec.width};
    if (frames.dims() != expected)
        throw ShapeError("movie '" + city + "': frames " + format_dims(frames.dims()) + ", expected " +
                         format_dims(expected));
    if (frames.dtype() != DType::U8) throw ShapeError("movie '" + city + "': frames must be u8");
    for (std::size_t i = 1; i < frame_ids.size(); ++i)
        if (frame_ids[i] <= frame_ids[i - 1])
            throw ConfigError("movie '" + city + "': frame ids not strictly increasing at index " + std::to_string(i));
}

TrafficMovie TrafficMovie::from_frames(Tensor frames, std::string city, GridSpec base) {
    if (frames.rank() != 4) throw ShapeError("movie frames must be [T, C, H, W], got " + format_dims(frames.dims()));
    base.channels = frames.dim(1);
    base.height = frames.dim(2);
    base.width = frames.dim(3);
    std::vector<std::int64_t> ids(frames.dim(0));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
    TrafficMovie m{base, std::move(frames), std::move(city), std::move(ids)};
    m.validate();
    return m;
}

TrafficMovie load_movie(const fs::path& path, std::string city, GridSpec base) {
    auto movie = TrafficMovie::from_frames(read_tensor(path), std::move(city), base);
    fs::path sidecar = path;
    sidecar += ".ids";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        std::vector<std::int64_t> ids;
        std::int64_t v;
        while (in >> v) ids.push_back(v);
        if (!in.eof()) throw FormatError(sidecar.string() + ": non-integer frame id");
        if (ids.size() != movie.frame_count())
            throw FormatError(sidecar.string() + ": " + std::to_string(ids.size()) + " ids for " +
                              std::to_string(movie.frame_count()) + " frames");
        movie.frame_ids = std::move(ids);
        movie.validate();
    }
    return movie;
}

namespace {

void validate_slot_set(const SlotSet& s, std::size_t channel_axis, const char* what) {
    s.spec.validate();
    const Dims expected{s.slots.size(), channel_axis, s.spec.height, s.spec.width};
    if (s.values.dims() != expected)
        throw ShapeError(std::string(what) + " values " + format_dims(s.values.dims()) + ", expected " +
                         format_dims(expected));
    std::set<std::string> seen;
    for (const auto& id : s.slots)
        if (!seen.insert(id).second) throw ConfigError(std::string(what) + ": duplicate slot id '" + id + "'");
}

// Accepts [K, H, W] or [T, C, H, W] and returns [K, H, W].
Tensor as_stacked(const Tensor& t) {
    if (t.rank() == 3) return t;
    if (t.rank() == 4) return reshape_for_model(t);
    throw ShapeError("slot tensor must be [K, H, W] or [T, C, H, W], got " + format_dims(t.dims()));
}

template <typename Set>
Set assemble(const GridSpec& base, std::vector<std::string> slots, std::span<const Tensor> per_slot) {
    if (slots.size() != per_slot.size())
        throw AlignmentError(std::to_string(slots.size()) + " slot ids for " + std::to_string(per_slot.size()) +
                             " tensors");
    if (per_slot.empty()) throw ConfigError("slot set must contain at least one slot");
    std::vector<Tensor> parts;
    parts.reserve(per_slot.size());
    bool any_f32 = false;
    for (const auto& t : per_slot) {
        parts.push_back(as_stacked(t));
        any_f32 |= t.dtype() == DType::F32;
    }
    if (any_f32)
        for (auto& p : parts) p = p.to_f32();
    Set s;
    s.spec = base;
    s.spec.height = parts.front().dim(1);
    s.spec.width = parts.front().dim(2);
    s.slots = std::move(slots);
    s.values = stack(parts);
    s.validate();
    return s;
}

}  // namespace

void PredictionSet::validate() const { validate_slot_set(*this, spec.output_channels(), "prediction set"); }
void InputSet::validate() const { validate_slot_set(*this, spec.input_channels(), "input set"); }

PredictionSet make_prediction_set(const GridSpec& spec, std::vector<std::string> slots,
                                  std::span<const Tensor> per_slot) {
    return assemble<PredictionSet>(spec, std::move(slots), per_slot);
}

InputSet make_input_set(const GridSpec& spec, std::vector<std::string> slots, std::span<const Tensor> per_slot) {
    return assemble<InputSet>(spec, std::move(slots), per_slot);
}

std::vector<std::string> list_slots(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<std::string> slots;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".t4gr")
            slots.push_back(entry.path().stem().string());
    std::sort(slots.begin(), slots.end());
    return slots;
}

namespace {

template <typename Set>
Set load_dir(const fs::path& dir, const GridSpec& base, std::size_t channel_axis) {
    auto slots = list_slots(dir);
    if (slots.empty()) throw ConfigError("no .t4gr slot files in '" + dir.string() + "'");
    std::vector<Tensor> parts;
    parts.reserve(slots.size());
    for (const auto& id : slots) {
        const auto file = dir / (id + ".t4gr");
        auto t = as_stacked(read_tensor(file));
        if (t.dim(0) != channel_axis)
            throw FormatError(file.string() + ": channel axis " + std::to_string(t.dim(0)) + ", expected " +
                              std::to_string(channel_axis));
        if (!parts.empty() && t.dims() != parts.front().dims())
            throw FormatError(file.string() + ": dims " + format_dims(t.dims()) + " differ from " +
                              format_dims(parts.front().dims()));
        parts.push_back(std::move(t));
    }
    return assemble<Set>(base, std::move(slots), parts);
}

}  // namespace

InputSet load_input_dir(const fs::path& dir, const GridSpec& base) {
    return load_dir<InputSet>(dir, base, base.input_channels());
}

PredictionSet load_prediction_dir(const fs::path& dir, const GridSpec& base) {
    return load_dir<PredictionSet>(dir, base, base.output_channels());
}

void write_slot_dir(const SlotSet& set, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < set.slot_count(); ++i) write_tensor(set.slot(i), dir / (set.slots[i] + ".t4gr"));
}

PredictionSet prediction_set_from_tensor(const Tensor& t, const GridSpec& base) {
    if (t.rank() != 4) throw ShapeError("prediction tensor must be [N, K, H, W], got " + format_dims(t.dims()));
    PredictionSet s;
    s.spec = base;
    s.spec.height = t.dim(2);
    s.spec.width = t.dim(3);
    for (std::size_t i = 0; i < t.dim(0); ++i) s.slots.push_back(std::to_string(i));
    s.values = t;
    s.validate();
    return s;
}

void require_same_slots(const SlotSet& a, const SlotSet& b, const std::string& context) {
    if (a.slots == b.slots) return;
    std::string diverging;
    const std::size_t n = std::max(a.slots.size(), b.slots.size());
    int listed = 0;
    for (std::size_t i = 0; i < n && listed < 8; ++i) {
        const std::string x = i < a.slots.size() ? a.slots[i] : "<none>";
        const std::string y = i < b.slots.size() ? b.slots[i] : "<none>";
        if (x != y) {
            diverging += (listed ? ", " : "") + ("#" + std::to_string(i) + " '" + x + "' vs '" + y + "'");
            ++listed;
        }
    }
    throw AlignmentError(context + ": slot lists diverge: " + diverging);
}

}  // namespace t4c
