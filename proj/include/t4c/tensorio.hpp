#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "t4c/error.hpp"
#include "t4c/tensor.hpp"

namespace t4c {

// T4GR container layout (all integers little-endian):
//   offset 0  magic "T4GR"
//          4  version u8 (= 1)
//          5  dtype   u8 (0 = u8, 1 = f32 IEEE-754)
//          6  ndim    u8
//          7  reserved u8 (= 0)
//          8  ndim x u32 extents
//   then the row-major payload.
inline constexpr std::uint8_t kT4grVersion = 1;
inline constexpr std::size_t kT4grFixedHeader = 8;

enum class T4grFault {
    BadMagic,
    UnsupportedVersion,
    UnknownDType,
    ReservedNonZero,
    TruncatedHeader,
    TruncatedPayload,
    TrailingBytes,
    DimsOverflow,
    NonFiniteValue,
};

const char* fault_name(T4grFault fault) noexcept;

class T4grError : public FormatError {
   public:
    T4grError(T4grFault fault, const std::string& what) : FormatError(what), fault_(fault) {}
    T4grFault fault() const noexcept { return fault_; }

   private:
    T4grFault fault_;
};

std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> buffer);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace t4c
