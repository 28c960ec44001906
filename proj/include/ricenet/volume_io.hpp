#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ricenet/volume.hpp"

namespace ricenet {

// A volume on disk is a pair `<base>.json` (header) + `<base>.raw` (payload).
// `path` may be the base name or either member of the pair.
Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& vol, const std::filesystem::path& path);

std::filesystem::path volume_header_path(const std::filesystem::path& path);
std::filesystem::path volume_payload_path(const std::filesystem::path& path);

// Little-endian IEEE-754 float32 encoding shared by volumes and checkpoints.
std::vector<std::uint8_t> encode_f32le(std::span<const float> values);
std::vector<float> decode_f32le(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// FNV-1a 64-bit digest as 16 hex digits; used for file-identity checks.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string file_digest(const std::filesystem::path& path);

} // namespace ricenet
