#include "t4c/digest.hpp"

#include <cstdio>

#include "t4c/tensorio.hpp"

namespace t4c {

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t h) {
    for (auto b : bytes) {
        h ^= std::to_integer<std::uint64_t>(b);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex_digest(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) { return hex_digest(fnv1a64(read_file_bytes(path))); }

std::string tensor_digest(const Tensor& t) { return hex_digest(fnv1a64(encode_tensor(t))); }

}  // namespace t4c
