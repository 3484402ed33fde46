#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace t4c {

enum class DType : std::uint8_t { U8 = 0, F32 = 1 };

const char* dtype_name(DType dtype) noexcept;

using Dims = std::vector<std::size_t>;

std::string format_dims(const Dims& dims);

// Product of extents; throws ShapeError if it overflows size_t.
std::size_t element_count(const Dims& dims);

// Dense row-major tensor of u8 or f32 elements. Immutable once built: all
// transforms return new tensors. f32 tensors never hold NaN or Inf.
class Tensor {
   public:
    Tensor() = default;
    Tensor(Dims dims, std::vector<std::uint8_t> data);
    Tensor(Dims dims, std::vector<float> data);

    static Tensor zeros(Dims dims, DType dtype);
    static Tensor filled(Dims dims, DType dtype, double value);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept;
    DType dtype() const noexcept { return static_cast<DType>(data_.index()); }
    bool empty() const noexcept { return size() == 0; }

    // Typed views; throw ConfigError when the dtype does not match.
    std::span<const std::uint8_t> u8() const;
    std::span<const float> f32() const;

    // Element widened to double, for dtype-agnostic consumers.
    double value(std::size_t flat_index) const {
        if (const auto* b = std::get_if<std::vector<std::uint8_t>>(&data_)) return (*b)[flat_index];
        return std::get<std::vector<float>>(data_)[flat_index];
    }

    // Same payload, new extents with the same element count.
    Tensor reshaped(Dims dims) const;

    // f32 copy (exact for u8 sources).
    Tensor to_f32() const;
    // Clip to [0, 255] and round half-up to u8. Identity for u8 tensors.
    Tensor to_u8() const;

    // Raw bytes of the payload in host order (little-endian on supported hosts).
    std::span<const std::byte> bytes() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b);

   private:
    Dims dims_;
    std::variant<std::vector<std::uint8_t>, std::vector<float>> data_;
};

// Half-up rounding of a value clipped to [0, 255].
std::uint8_t quantize_u8(double v) noexcept;

// [T, C, H, W] -> [T*C, H, W]
Tensor reshape_for_model(const Tensor& window);
// [T*C, H, W] -> [T, C, H, W]
Tensor unshape(const Tensor& stacked, std::size_t channels);

// Pads the trailing two axes to target_h x target_w; content stays top-left.
Tensor pad(const Tensor& t, std::size_t target_h, std::size_t target_w, std::uint8_t fill = 0);
// Keeps the top-left height x width corner of the trailing two axes.
Tensor crop(const Tensor& t, std::size_t height, std::size_t width);

// Leading slice along axis 0, e.g. one slot of an [N, ...] tensor.
Tensor slice0(const Tensor& t, std::size_t index);
// Stacks equally shaped, same-dtype tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

}  // namespace t4c
