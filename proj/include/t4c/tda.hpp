#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "t4c/grid.hpp"

namespace t4c {

// Output policy for the scaling transforms. F32 keeps full precision;
// U8 clips to [0, 255] and rounds half-up.
enum class Quantize { None, U8 };

// Per-pixel, per-channel mean traffic [C, H, W] over a set of frames.
struct MeanMap {
    Tensor values;
    std::size_t frame_count = 0;
    std::string year_label;

    std::size_t channels() const { return values.dim(0); }
};

// Ratio of train-period to test-period mean traffic, floored at 1.
struct LambdaMap {
    Tensor values;

    std::size_t channels() const { return values.dim(0); }
    void validate() const;
};

MeanMap mean_map(std::span<const TrafficMovie> movies, std::string year_label = {});

// Means over frame stacks laid out [..., C, H, W] in row-major order, e.g.
// [T, C, H, W] movies or [T_in * C, H, W] model inputs.
MeanMap mean_map_from_tensors(std::span<const Tensor> stacks, std::size_t channels, std::string year_label = {});

// m_train / m_test element-wise; 1 where m_test is 0; values below 1 raised to 1.
LambdaMap compute_lambda(const MeanMap& m_train, const MeanMap& m_test);

// Multiplies by lambda, broadcasting lambda channel (k mod C) over every
// group of C planes, so [T_in * C, H, W], [N, K, H, W] and [T, C, H, W]
// layouts are all accepted.
Tensor apply_lambda(const Tensor& input, const LambdaMap& lambda, Quantize mode = Quantize::None);
InputSet apply_lambda(const InputSet& inputs, const LambdaMap& lambda, Quantize mode = Quantize::None);

// Multiplies by 1/lambda (with 1/0 taken as 1) under the same broadcast.
Tensor apply_inverse_lambda(const Tensor& pred, const LambdaMap& lambda, Quantize mode = Quantize::None);
PredictionSet apply_inverse_lambda(const PredictionSet& pred, const LambdaMap& lambda,
                                   Quantize mode = Quantize::None);

void save_lambda(const LambdaMap& lambda, const std::filesystem::path& path);
LambdaMap load_lambda(const std::filesystem::path& path);

}  // namespace t4c
