#include "t4c/dataset.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "t4c/error.hpp"

namespace t4c {

std::size_t sample_span(const GridSpec& spec) {
    return spec.t_in + *std::max_element(std::begin(kTargetOffsets), std::end(kTargetOffsets));
}

std::vector<SampleIndex> enumerate_samples(const TrafficMovie& movie, std::size_t stride, std::string movie_id) {
    if (stride == 0) throw ConfigError("sample stride must be >= 1");
    movie.validate();
    if (movie_id.empty()) movie_id = movie.city;
    const std::size_t span = sample_span(movie.spec);
    const auto& ids = movie.frame_ids;
    std::vector<SampleIndex> out;
    if (ids.size() < span) return out;
    const auto gap_free = static_cast<std::int64_t>(span - 1);
    for (std::size_t s = 0; s + span <= ids.size(); s += stride)
        // ids are strictly increasing, so this difference is span-1 exactly
        // when no frame is missing inside the window.
        if (ids[s + span - 1] - ids[s] == gap_free) out.push_back({movie_id, s});
    return out;
}

TrainingPair extract_sample(const TrafficMovie& movie, const SampleIndex& s) {
    const std::size_t span = sample_span(movie.spec);
    if (s.start_frame + span > movie.frame_count())
        throw BoundsError("sample start " + std::to_string(s.start_frame) + " needs " + std::to_string(span) +
                          " frames, movie '" + movie.city + "' has " + std::to_string(movie.frame_count()));
    const auto& spec = movie.spec;
    const std::size_t frame = spec.frame_size();
    const auto src = movie.frames.u8();

    auto frame_at = [&](std::size_t idx) { return src.begin() + static_cast<std::ptrdiff_t>(idx * frame); };

    std::vector<std::uint8_t> input(frame_at(s.start_frame), frame_at(s.start_frame + spec.t_in));
    std::vector<std::uint8_t> target;
    target.reserve(spec.t_out * frame);
    const std::size_t last_input = s.start_frame + spec.t_in - 1;
    for (std::size_t k = 0; k < spec.t_out; ++k) {
        const std::size_t f = last_input + kTargetOffsets[k];
        target.insert(target.end(), frame_at(f), frame_at(f + 1));
    }
    return {Tensor({spec.input_channels(), spec.height, spec.width}, std::move(input)),
            Tensor({spec.output_channels(), spec.height, spec.width}, std::move(target))};
}

void validate_training_pair(const TrainingPair& pair, const GridSpec& spec) {
    const Dims in{spec.input_channels(), spec.height, spec.width};
    const Dims out{spec.output_channels(), spec.height, spec.width};
    if (pair.input.dims() != in)
        throw ShapeError("training input " + format_dims(pair.input.dims()) + ", expected " + format_dims(in));
    if (pair.target.dims() != out)
        throw ShapeError("training target " + format_dims(pair.target.dims()) + ", expected " + format_dims(out));
}

namespace {

// Unbiased draw in [0, bound] by rejection on the top of the 64-bit range.
std::uint64_t draw_at_most(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t range = bound + 1;
    if (range == 0) return rng();
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t v;
    do v = rng();
    while (v >= limit);
    return v % range;
}

}  // namespace

FoldSplit make_folds(const std::vector<SampleIndex>& samples, std::uint64_t seed, int validation_fold) {
    if (samples.empty()) throw ConfigError("cannot split an empty sample list into folds");
    if (validation_fold < 0 || validation_fold >= kFoldCount)
        throw ConfigError("validation fold must be in [0, " + std::to_string(kFoldCount) + ")");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[draw_at_most(rng, i)]);

    FoldSplit split;
    split.samples = samples;
    split.fold_of_sample.assign(samples.size(), 0);
    split.validation_fold = validation_fold;
    split.seed = seed;
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        split.fold_of_sample[order[rank]] = static_cast<int>(rank % kFoldCount);
    return split;
}

std::vector<std::size_t> FoldSplit::fold_sizes() const {
    std::vector<std::size_t> sizes(kFoldCount, 0);
    for (int f : fold_of_sample) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
}

std::vector<SampleIndex> FoldSplit::fold(int id) const {
    std::vector<SampleIndex> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (fold_of_sample[i] == id) out.push_back(samples[i]);
    return out;
}

std::vector<SampleIndex> FoldSplit::training() const {
    std::vector<SampleIndex> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (fold_of_sample[i] != validation_fold) out.push_back(samples[i]);
    return out;
}

std::string FoldSplit::to_text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < samples.size(); ++i)
        os << samples[i].movie_id << ' ' << samples[i].start_frame << ' ' << fold_of_sample[i] << '\n';
    return os.str();
}

FoldSplit FoldSplit::from_text(const std::string& text, std::uint64_t seed, int validation_fold) {
    FoldSplit split;
    split.seed = seed;
    split.validation_fold = validation_fold;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        SampleIndex s;
        int fold = -1;
        std::string extra;
        if (!(ls >> s.movie_id >> s.start_frame >> fold) || (ls >> extra) || fold < 0 || fold >= kFoldCount)
            throw FormatError("fold manifest line " + std::to_string(lineno) + ": '" + line + "'");
        split.samples.push_back(std::move(s));
        split.fold_of_sample.push_back(fold);
    }
    return split;
}

}  // namespace t4c
