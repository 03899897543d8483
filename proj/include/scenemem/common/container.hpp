#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace scenemem {

// Binary container shared by feature files, codebooks and network checkpoints:
//
//   "SMEM" | u32 version | u64 header_bytes | JSON header | payload
//
// All integers and floats are little-endian. The header always carries
// "payload_count", the number of values that follow, and "dtype" ("f32" or
// "f64"). Files without "dtype" are f32.
struct Container {
  nlohmann::json header;
  std::vector<float> payload;
};

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const float> payload);
Container read_container(const std::filesystem::path& path);

struct Container64 {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const double> payload);
Container64 read_container64(const std::filesystem::path& path);

}  // namespace scenemem
