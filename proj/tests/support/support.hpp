#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "t4c/grid.hpp"
#include "t4c/tensor.hpp"

namespace t4c::testing {

inline Tensor random_u8(std::mt19937_64& rng, Dims dims, int max_value = 255, double zero_prob = 0.0) {
    std::uniform_int_distribution<int> v(0, max_value);
    std::bernoulli_distribution zero(zero_prob);
    std::vector<std::uint8_t> data(element_count(dims));
    for (auto& x : data) x = zero(rng) ? 0 : static_cast<std::uint8_t>(v(rng));
    return Tensor(std::move(dims), std::move(data));
}

inline Tensor random_f32(std::mt19937_64& rng, Dims dims, float lo = 0.0f, float hi = 255.0f) {
    std::uniform_real_distribution<float> v(lo, hi);
    std::vector<float> data(element_count(dims));
    for (auto& x : data) x = v(rng);
    return Tensor(std::move(dims), std::move(data));
}

inline GridSpec small_grid(std::size_t h = 4, std::size_t w = 4, std::size_t c = 8) {
    GridSpec g;
    g.height = h;
    g.width = w;
    g.channels = c;
    return g;
}

inline PredictionSet random_predictions(std::mt19937_64& rng, const GridSpec& g, std::size_t n, bool f32 = true) {
    PredictionSet p;
    p.spec = g;
    for (std::size_t i = 0; i < n; ++i) p.slots.push_back("slot" + std::to_string(i));
    const Dims d{n, g.output_channels(), g.height, g.width};
    p.values = f32 ? random_f32(rng, d) : random_u8(rng, d);
    return p;
}

inline InputSet random_inputs(std::mt19937_64& rng, const GridSpec& g, std::size_t n, int max_value = 255) {
    InputSet s;
    s.spec = g;
    for (std::size_t i = 0; i < n; ++i) s.slots.push_back("slot" + std::to_string(i));
    s.values = random_u8(rng, {n, g.input_channels(), g.height, g.width}, max_value);
    return s;
}

// Scoped scratch directory under the system temp path.
class TempDir {
   public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("t4c_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

   private:
    std::filesystem::path path_;
};

}  // namespace t4c::testing
