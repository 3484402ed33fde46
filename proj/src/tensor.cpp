#include "t4c/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "t4c/error.hpp"

namespace t4c {

const char* dtype_name(DType dtype) noexcept {
    switch (dtype) {
        case DType::U8:
            return "u8";
        case DType::F32:
            return "f32";
    }
    return "?";
}

std::string format_dims(const Dims& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ", ";
        os << dims[i];
    }
    os << ']';
    return os.str();
}

std::size_t element_count(const Dims& dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
            throw ShapeError("element count of " + format_dims(dims) + " overflows");
        n *= d;
    }
    return n;
}

Tensor::Tensor(Dims dims, std::vector<std::uint8_t> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != size())
        throw ShapeError("dims " + format_dims(dims_) + " do not match " + std::to_string(size()) + " elements");
}

Tensor::Tensor(Dims dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != size())
        throw ShapeError("dims " + format_dims(dims_) + " do not match " + std::to_string(size()) + " elements");
    const auto& v = std::get<std::vector<float>>(data_);
    auto bad = std::find_if(v.begin(), v.end(), [](float x) { return !std::isfinite(x); });
    if (bad != v.end())
        throw ConfigError("non-finite f32 value at flat index " + std::to_string(bad - v.begin()));
}

Tensor Tensor::zeros(Dims dims, DType dtype) { return filled(std::move(dims), dtype, 0.0); }

Tensor Tensor::filled(Dims dims, DType dtype, double value) {
    const auto n = element_count(dims);
    if (dtype == DType::U8) return Tensor(std::move(dims), std::vector<std::uint8_t>(n, quantize_u8(value)));
    return Tensor(std::move(dims), std::vector<float>(n, static_cast<float>(value)));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= dims_.size())
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + format_dims(dims_));
    return dims_[axis];
}

std::size_t Tensor::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::span<const std::uint8_t> Tensor::u8() const {
    if (const auto* b = std::get_if<std::vector<std::uint8_t>>(&data_)) return *b;
    throw ConfigError("tensor has dtype f32, u8 view requested");
}

std::span<const float> Tensor::f32() const {
    if (const auto* f = std::get_if<std::vector<float>>(&data_)) return *f;
    throw ConfigError("tensor has dtype u8, f32 view requested");
}

Tensor Tensor::reshaped(Dims dims) const {
    if (element_count(dims) != size())
        throw ShapeError("cannot reshape " + format_dims(dims_) + " to " + format_dims(dims));
    Tensor out = *this;
    out.dims_ = std::move(dims);
    return out;
}

Tensor Tensor::to_f32() const {
    if (dtype() == DType::F32) return *this;
    auto src = u8();
    return Tensor(dims_, std::vector<float>(src.begin(), src.end()));
}

Tensor Tensor::to_u8() const {
    if (dtype() == DType::U8) return *this;
    auto src = f32();
    std::vector<std::uint8_t> out(src.size());
    std::transform(src.begin(), src.end(), out.begin(), [](float x) { return quantize_u8(x); });
    return Tensor(dims_, std::move(out));
}

std::span<const std::byte> Tensor::bytes() const noexcept {
    return std::visit(
        [](const auto& v) { return std::as_bytes(std::span(v.data(), v.size())); }, data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
    if (a.dims_ != b.dims_ || a.dtype() != b.dtype()) return false;
    auto x = a.bytes();
    auto y = b.bytes();
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size()) == 0;
}

std::uint8_t quantize_u8(double v) noexcept {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

namespace {

template <typename T>
std::vector<T> copy_block(std::span<const T> src, std::size_t offset, std::size_t count) {
    return std::vector<T>(src.begin() + static_cast<std::ptrdiff_t>(offset),
                          src.begin() + static_cast<std::ptrdiff_t>(offset + count));
}

template <typename Fn>
decltype(auto) with_payload(const Tensor& t, Fn&& fn) {
    if (t.dtype() == DType::U8) return fn(t.u8());
    return fn(t.f32());
}

}  // namespace

Tensor reshape_for_model(const Tensor& window) {
    if (window.rank() != 4)
        throw ShapeError("reshape_for_model expects [T, C, H, W], got " + format_dims(window.dims()));
    const auto& d = window.dims();
    // Row-major [T, C, H, W] and [T*C, H, W] share the same element order.
    return window.reshaped({d[0] * d[1], d[2], d[3]});
}

Tensor unshape(const Tensor& stacked, std::size_t channels) {
    if (stacked.rank() != 3 || channels == 0 || stacked.dim(0) % channels != 0)
        throw ShapeError("unshape expects [T*" + std::to_string(channels) + ", H, W], got " +
                         format_dims(stacked.dims()));
    const auto& d = stacked.dims();
    return stacked.reshaped({d[0] / channels, channels, d[1], d[2]});
}

Tensor pad(const Tensor& t, std::size_t target_h, std::size_t target_w, std::uint8_t fill) {
    if (t.rank() < 2) throw ShapeError("pad expects at least 2 axes, got " + format_dims(t.dims()));
    Dims out_dims = t.dims();
    const std::size_t h = out_dims[out_dims.size() - 2];
    const std::size_t w = out_dims[out_dims.size() - 1];
    if (target_h < h || target_w < w)
        throw ShapeError("pad target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                         " is smaller than source " + format_dims(t.dims()));
    out_dims[out_dims.size() - 2] = target_h;
    out_dims[out_dims.size() - 1] = target_w;
    const std::size_t planes = h * w == 0 ? 0 : t.size() / (h * w);

    return with_payload(t, [&](auto src) {
        using T = typename decltype(src)::value_type;
        std::vector<T> out(element_count(out_dims), static_cast<T>(fill));
        for (std::size_t p = 0; p < planes; ++p)
            for (std::size_t r = 0; r < h; ++r)
                std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((p * h + r) * w), w,
                            out.begin() + static_cast<std::ptrdiff_t>((p * target_h + r) * target_w));
        return Tensor(out_dims, std::move(out));
    });
}

Tensor crop(const Tensor& t, std::size_t height, std::size_t width) {
    if (t.rank() < 2) throw ShapeError("crop expects at least 2 axes, got " + format_dims(t.dims()));
    Dims out_dims = t.dims();
    const std::size_t h = out_dims[out_dims.size() - 2];
    const std::size_t w = out_dims[out_dims.size() - 1];
    if (height > h || width > w)
        throw ShapeError("crop target " + std::to_string(height) + "x" + std::to_string(width) +
                         " exceeds source " + format_dims(t.dims()));
    out_dims[out_dims.size() - 2] = height;
    out_dims[out_dims.size() - 1] = width;
    const std::size_t planes = h * w == 0 ? 0 : t.size() / (h * w);

    return with_payload(t, [&](auto src) {
        using T = typename decltype(src)::value_type;
        std::vector<T> out(element_count(out_dims));
        for (std::size_t p = 0; p < planes; ++p)
            for (std::size_t r = 0; r < height; ++r)
                std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((p * h + r) * w), width,
                            out.begin() + static_cast<std::ptrdiff_t>((p * height + r) * width));
        return Tensor(out_dims, std::move(out));
    });
}

Tensor slice0(const Tensor& t, std::size_t index) {
    if (t.rank() < 1 || index >= t.dim(0))
        throw BoundsError("slice " + std::to_string(index) + " out of range for " + format_dims(t.dims()));
    Dims inner(t.dims().begin() + 1, t.dims().end());
    const std::size_t n = element_count(inner);
    return with_payload(t, [&](auto src) { return Tensor(inner, copy_block(src, index * n, n)); });
}

Tensor stack(std::span<const Tensor> parts) {
    if (parts.empty()) throw ConfigError("stack of zero tensors");
    const auto& first = parts.front();
    for (const auto& p : parts)
        if (p.dims() != first.dims() || p.dtype() != first.dtype())
            throw ShapeError("stack: " + format_dims(p.dims()) + "/" + dtype_name(p.dtype()) + " vs " +
                             format_dims(first.dims()) + "/" + dtype_name(first.dtype()));
    Dims out_dims{parts.size()};
    out_dims.insert(out_dims.end(), first.dims().begin(), first.dims().end());

    return with_payload(first, [&](auto probe) {
        using T = typename decltype(probe)::value_type;
        std::vector<T> out;
        out.reserve(element_count(out_dims));
        for (const auto& p : parts) {
            std::span<const T> s;
            if constexpr (std::is_same_v<T, std::uint8_t>)
                s = p.u8();
            else
                s = p.f32();
            out.insert(out.end(), s.begin(), s.end());
        }
        return Tensor(out_dims, std::move(out));
    });
}

}  // namespace t4c
