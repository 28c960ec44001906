#include "ricenet/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ricenet/errors.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDtype = "f32le";
constexpr const char* kOrder = "x-fastest";

fs::path strip_pair_extension(const fs::path& path)
{
    const auto ext = path.extension();
    if (ext == ".json" || ext == ".raw") {
        fs::path base = path;
        base.replace_extension();
        return base;
    }
    return path;
}

template <typename T, std::size_t N>
std::array<T, N> read_triple(const json& header, const char* key)
{
    if (!header.contains(key) || !header[key].is_array() || header[key].size() != N) {
        throw FormatError(std::string("volume header: '") + key + "' must be an array of " + std::to_string(N));
    }
    std::array<T, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        const auto& v = header[key][i];
        if (!v.is_number()) {
            throw FormatError(std::string("volume header: '") + key + "' entries must be numbers");
        }
        out[i] = v.get<T>();
    }
    return out;
}

} // namespace

fs::path volume_header_path(const fs::path& path)
{
    fs::path p = strip_pair_extension(path);
    p += ".json";
    return p;
}

fs::path volume_payload_path(const fs::path& path)
{
    fs::path p = strip_pair_extension(path);
    p += ".raw";
    return p;
}

std::vector<std::uint8_t> encode_f32le(std::span<const float> values)
{
    std::vector<std::uint8_t> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        bytes[4 * i + 0] = static_cast<std::uint8_t>(bits & 0xffu);
        bytes[4 * i + 1] = static_cast<std::uint8_t>((bits >> 8) & 0xffu);
        bytes[4 * i + 2] = static_cast<std::uint8_t>((bits >> 16) & 0xffu);
        bytes[4 * i + 3] = static_cast<std::uint8_t>((bits >> 24) & 0xffu);
    }
    return bytes;
}

std::vector<float> decode_f32le(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() % 4 != 0) {
        throw SizeMismatchError("f32le payload length is not a multiple of 4");
    }
    std::vector<float> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        values[i] = std::bit_cast<float>(bits);
    }
    return values;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

void write_text_file(const fs::path& path, const std::string& text)
{
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const fs::path& path)
{
    return fnv1a_hex(read_file_bytes(path));
}

Volume read_volume(const fs::path& path)
{
    const auto header_path = volume_header_path(path);
    const auto payload_path = volume_payload_path(path);
    if (!fs::exists(header_path)) {
        throw IoError("volume header '" + header_path.string() + "' not found");
    }
    if (!fs::exists(payload_path)) {
        throw IoError("volume payload '" + payload_path.string() + "' not found");
    }

    json header;
    try {
        header = json::parse(read_text_file(header_path));
    } catch (const json::parse_error& e) {
        throw FormatError("volume header '" + header_path.string() + "' is not valid JSON: " + e.what());
    }
    if (!header.is_object()) {
        throw FormatError("volume header must be a JSON object");
    }
    if (!header.contains("dtype") || header["dtype"] != kDtype) {
        throw FormatError("unsupported volume dtype in '" + header_path.string() + "' (expected \"f32le\")");
    }
    if (!header.contains("order") || header["order"] != kOrder) {
        throw FormatError("unsupported voxel order in '" + header_path.string() + "' (expected \"x-fastest\")");
    }
    const auto shape = read_triple<int, 3>(header, "shape");
    const auto spacing = read_triple<double, 3>(header, "spacing_mm");
    const auto origin = read_triple<double, 3>(header, "origin_mm");
    for (int s : shape) {
        if (s < 1) {
            throw FormatError("volume header: shape components must be positive");
        }
    }

    const auto bytes = read_file_bytes(payload_path);
    const std::size_t expected = voxel_count(shape) * 4;
    if (bytes.size() != expected) {
        throw SizeMismatchError("volume payload '" + payload_path.string() + "' holds " + std::to_string(bytes.size()) +
                                " bytes, header shape needs " + std::to_string(expected));
    }
    Volume vol(shape, spacing, origin, decode_f32le(bytes));
    require_finite(vol, payload_path.string().c_str());
    return vol;
}

void write_volume(const Volume& vol, const fs::path& path)
{
    require_finite(vol, "write_volume");
    json header;
    header["shape"] = vol.shape();
    header["spacing_mm"] = vol.spacing();
    header["origin_mm"] = vol.origin();
    header["dtype"] = kDtype;
    header["order"] = kOrder;
    write_text_file(volume_header_path(path), header.dump(2) + "\n");
    write_file_bytes(volume_payload_path(path), encode_f32le(vol.values()));
}

} // namespace ricenet
