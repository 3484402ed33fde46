#include "t4c/tensorio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace t4c {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

const char* fault_name(T4grFault fault) noexcept {
    switch (fault) {
        case T4grFault::BadMagic:
            return "bad magic";
        case T4grFault::UnsupportedVersion:
            return "unsupported version";
        case T4grFault::UnknownDType:
            return "unknown dtype";
        case T4grFault::ReservedNonZero:
            return "reserved byte set";
        case T4grFault::TruncatedHeader:
            return "truncated header";
        case T4grFault::TruncatedPayload:
            return "truncated payload";
        case T4grFault::TrailingBytes:
            return "trailing bytes";
        case T4grFault::DimsOverflow:
            return "dims overflow";
        case T4grFault::NonFiniteValue:
            return "non-finite value";
    }
    return "?";
}

namespace {

constexpr std::byte kMagic[4] = {std::byte{'T'}, std::byte{'4'}, std::byte{'G'}, std::byte{'R'}};

[[noreturn]] void fail(T4grFault fault, const std::string& detail) {
    throw T4grError(fault, std::string("T4GR ") + fault_name(fault) + ": " + detail);
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::byte* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::byte> encode_tensor(const Tensor& t) {
    if (t.rank() > 255) throw ShapeError("T4GR supports at most 255 axes, got " + std::to_string(t.rank()));
    std::vector<std::byte> out;
    const auto payload = t.bytes();
    out.reserve(kT4grFixedHeader + 4 * t.rank() + payload.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(std::byte{kT4grVersion});
    out.push_back(static_cast<std::byte>(t.dtype()));
    out.push_back(static_cast<std::byte>(t.rank()));
    out.push_back(std::byte{0});
    for (auto d : t.dims()) {
        if (d > std::numeric_limits<std::uint32_t>::max())
            throw ShapeError("extent " + std::to_string(d) + " does not fit in u32");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    if (t.dtype() == DType::F32 && std::endian::native == std::endian::big) {
        for (float f : t.f32()) put_u32(out, std::bit_cast<std::uint32_t>(f));
    } else {
        out.insert(out.end(), payload.begin(), payload.end());
    }
    return out;
}

Tensor decode_tensor(std::span<const std::byte> buf) {
    if (buf.size() < 4) fail(T4grFault::TruncatedHeader, std::to_string(buf.size()) + " bytes");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) fail(T4grFault::BadMagic, "expected 'T4GR'");
    if (buf.size() < kT4grFixedHeader) fail(T4grFault::TruncatedHeader, std::to_string(buf.size()) + " bytes");

    const auto version = std::to_integer<unsigned>(buf[4]);
    const auto dtype_code = std::to_integer<unsigned>(buf[5]);
    const auto ndim = std::to_integer<std::size_t>(buf[6]);
    if (version != kT4grVersion) fail(T4grFault::UnsupportedVersion, "version " + std::to_string(version));
    if (dtype_code > 1) fail(T4grFault::UnknownDType, "code " + std::to_string(dtype_code));
    if (buf[7] != std::byte{0}) fail(T4grFault::ReservedNonZero, "byte 7");

    const std::size_t header = kT4grFixedHeader + 4 * ndim;
    if (buf.size() < header)
        fail(T4grFault::TruncatedHeader, "need " + std::to_string(header) + " bytes for " + std::to_string(ndim) + " extents");

    Dims dims(ndim);
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        dims[i] = get_u32(buf.data() + kT4grFixedHeader + 4 * i);
        if (dims[i] != 0 && count > std::numeric_limits<std::size_t>::max() / 4 / dims[i])
            fail(T4grFault::DimsOverflow, format_dims(dims));
        count *= dims[i];
    }

    const auto dtype = static_cast<DType>(dtype_code);
    const std::size_t width = dtype == DType::U8 ? 1 : 4;
    const std::size_t payload = count * width;
    const std::size_t available = buf.size() - header;
    if (available < payload)
        fail(T4grFault::TruncatedPayload,
             "expected " + std::to_string(payload) + " payload bytes, found " + std::to_string(available));
    if (available > payload)
        fail(T4grFault::TrailingBytes, std::to_string(available - payload) + " bytes after payload");

    const std::byte* p = buf.data() + header;
    if (dtype == DType::U8) {
        std::vector<std::uint8_t> data(count);
        std::memcpy(data.data(), p, count);
        return Tensor(std::move(dims), std::move(data));
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
        if (!std::isfinite(data[i])) fail(T4grFault::NonFiniteValue, "flat index " + std::to_string(i));
    }
    return Tensor(std::move(dims), std::move(data));
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    in.seekg(0, std::ios::end);
    const auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> bytes(n);
    if (n && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n)))
        throw IoError("short read on '" + path.string() + "'");
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on '" + path.string() + "'");
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) { write_file_bytes(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_tensor(bytes);
    } catch (const T4grError& e) {
        throw T4grError(e.fault(), path.string() + ": " + e.what());
    }
}

}  // namespace t4c
