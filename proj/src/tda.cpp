#include "t4c/tda.hpp"

#include <cmath>
#include <vector>

#include "t4c/error.hpp"
#include "t4c/tensorio.hpp"

namespace t4c {

void LambdaMap::validate() const {
    if (values.rank() != 3 || values.dtype() != DType::F32)
        throw ShapeError("lambda map must be a [C, H, W] f32 tensor, got " + format_dims(values.dims()) + " " +
                         dtype_name(values.dtype()));
    for (float v : values.f32())
        if (!(v >= 1.0f)) throw ConfigError("lambda map holds a value below 1");
}

MeanMap mean_map_from_tensors(std::span<const Tensor> stacks, std::size_t channels, std::string year_label) {
    if (stacks.empty()) throw ConfigError("mean_map needs at least one frame source");
    if (channels == 0) throw ConfigError("mean_map needs a positive channel count");
    const auto& first = stacks.front().dims();
    if (first.size() < 3) throw ShapeError("mean_map source must be [..., H, W] with channels, got " + format_dims(first));
    const std::size_t h = first[first.size() - 2];
    const std::size_t w = first[first.size() - 1];
    const std::size_t frame = channels * h * w;

    std::vector<double> sum(frame, 0.0);
    std::size_t frames = 0;
    for (const auto& t : stacks) {
        const auto& d = t.dims();
        if (d.size() < 3 || d[d.size() - 2] != h || d[d.size() - 1] != w || frame == 0 || t.size() % frame != 0)
            throw ShapeError("mean_map source " + format_dims(d) + " is not a stack of [" + std::to_string(channels) +
                             ", " + std::to_string(h) + ", " + std::to_string(w) + "] frames");
        const std::size_t n = t.size() / frame;
        if (t.dtype() == DType::U8) {
            // Integer sums are exact; fold into double once per source.
            std::vector<std::uint64_t> acc(frame, 0);
            auto src = t.u8();
            for (std::size_t f = 0; f < n; ++f)
                for (std::size_t i = 0; i < frame; ++i) acc[i] += src[f * frame + i];
            for (std::size_t i = 0; i < frame; ++i) sum[i] += static_cast<double>(acc[i]);
        } else {
            auto src = t.f32();
            for (std::size_t f = 0; f < n; ++f)
                for (std::size_t i = 0; i < frame; ++i) sum[i] += src[f * frame + i];
        }
        frames += n;
    }
    if (frames == 0) throw ConfigError("mean_map sources contain no frames");

    std::vector<float> mean(frame);
    for (std::size_t i = 0; i < frame; ++i) mean[i] = static_cast<float>(sum[i] / static_cast<double>(frames));
    return {Tensor({channels, h, w}, std::move(mean)), frames, std::move(year_label)};
}

MeanMap mean_map(std::span<const TrafficMovie> movies, std::string year_label) {
    if (movies.empty()) throw ConfigError("mean_map needs at least one movie");
    std::vector<Tensor> frames;
    frames.reserve(movies.size());
    for (const auto& m : movies) {
        m.validate();
        if (m.spec.channels != movies.front().spec.channels)
            throw ShapeError("movie '" + m.city + "' channel count differs from movie '" + movies.front().city + "'");
        frames.push_back(m.frames);
    }
    return mean_map_from_tensors(frames, movies.front().spec.channels, std::move(year_label));
}

LambdaMap compute_lambda(const MeanMap& m_train, const MeanMap& m_test) {
    if (m_train.values.dims() != m_test.values.dims())
        throw ShapeError("mean maps differ: " + format_dims(m_train.values.dims()) + " vs " +
                         format_dims(m_test.values.dims()));
    const Tensor train = m_train.values.to_f32();
    const Tensor test = m_test.values.to_f32();
    auto num = train.f32();
    auto den = test.f32();
    std::vector<float> out(num.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        float ratio = den[i] == 0.0f ? 1.0f : num[i] / den[i];
        out[i] = ratio < 1.0f ? 1.0f : ratio;
    }
    return {Tensor(m_train.values.dims(), std::move(out))};
}

namespace {

// Calls fn(flat_index, lambda_value) for every element of `t`.
template <typename Fn>
void for_each_scaled(const Tensor& t, const LambdaMap& lambda, Fn&& fn) {
    lambda.validate();
    const auto& d = t.dims();
    const auto& ld = lambda.values.dims();
    if (d.size() < 3 || d[d.size() - 2] != ld[1] || d[d.size() - 1] != ld[2] || d[d.size() - 3] % ld[0] != 0)
        throw ShapeError("lambda " + format_dims(ld) + " cannot broadcast over " + format_dims(d));
    const std::size_t plane = ld[1] * ld[2];
    const std::size_t channels = ld[0];
    const std::size_t planes = plane == 0 ? 0 : t.size() / plane;
    const auto lam = lambda.values.f32();
    for (std::size_t p = 0; p < planes; ++p) {
        const float* lrow = lam.data() + (p % channels) * plane;
        for (std::size_t i = 0; i < plane; ++i) fn(p * plane + i, lrow[i]);
    }
}

template <typename Factor>
Tensor scale(const Tensor& t, const LambdaMap& lambda, Quantize mode, Factor&& factor) {
    if (mode == Quantize::U8) {
        std::vector<std::uint8_t> out(t.size());
        for_each_scaled(t, lambda, [&](std::size_t i, float l) { out[i] = quantize_u8(t.value(i) * factor(l)); });
        return Tensor(t.dims(), std::move(out));
    }
    std::vector<float> out(t.size());
    for_each_scaled(t, lambda,
                    [&](std::size_t i, float l) { out[i] = static_cast<float>(t.value(i) * factor(l)); });
    return Tensor(t.dims(), std::move(out));
}

double forward_factor(float l) { return l; }
double inverse_factor(float l) { return l == 0.0f ? 1.0 : 1.0 / static_cast<double>(l); }

}  // namespace

Tensor apply_lambda(const Tensor& input, const LambdaMap& lambda, Quantize mode) {
    return scale(input, lambda, mode, forward_factor);
}

InputSet apply_lambda(const InputSet& inputs, const LambdaMap& lambda, Quantize mode) {
    InputSet out = inputs;
    out.values = apply_lambda(inputs.values, lambda, mode);
    return out;
}

Tensor apply_inverse_lambda(const Tensor& pred, const LambdaMap& lambda, Quantize mode) {
    return scale(pred, lambda, mode, inverse_factor);
}

PredictionSet apply_inverse_lambda(const PredictionSet& pred, const LambdaMap& lambda, Quantize mode) {
    PredictionSet out = pred;
    out.values = apply_inverse_lambda(pred.values, lambda, mode);
    return out;
}

void save_lambda(const LambdaMap& lambda, const std::filesystem::path& path) {
    lambda.validate();
    write_tensor(lambda.values, path);
}

LambdaMap load_lambda(const std::filesystem::path& path) {
    LambdaMap l{read_tensor(path)};
    try {
        l.validate();
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return l;
}

}  // namespace t4c
