#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "t4c/tensor.hpp"

namespace t4c {

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex_digest(std::uint64_t h);

std::string file_digest(const std::filesystem::path& path);
// Covers dtype and dims as well as the payload.
std::string tensor_digest(const Tensor& t);

}  // namespace t4c
