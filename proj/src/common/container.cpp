#include "scenemem/common/container.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scenemem {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic{'S', 'M', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
void write_impl(const std::filesystem::path& path, nlohmann::json header, std::span<const T> payload) {
  header["payload_count"] = payload.size();
  header["dtype"] = dtype_name<T>();
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  const std::uint64_t header_bytes = text.size();
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  out.write(reinterpret_cast<const char*>(&header_bytes), sizeof(header_bytes));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size_bytes()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename T>
void read_impl(const std::filesystem::path& path, nlohmann::json& header, std::vector<T>& payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open container: " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint64_t header_bytes = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_bytes), sizeof(header_bytes));
  if (!in || magic != kMagic) {
    throw std::runtime_error("not a container file: " + path.string());
  }
  if (version != kVersion) {
    throw std::runtime_error("unsupported container version " + std::to_string(version));
  }
  std::string text(header_bytes, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_bytes));
  if (!in) throw std::runtime_error("truncated container header: " + path.string());

  header = nlohmann::json::parse(text);
  const std::string dtype = header.value("dtype", std::string("f32"));
  if (dtype != dtype_name<T>()) {
    throw std::runtime_error("container " + path.string() + " holds " + dtype + ", expected " +
                             dtype_name<T>());
  }
  const auto count = header.at("payload_count").get<std::size_t>();
  payload.resize(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw std::runtime_error("truncated container payload: " + path.string());
}

}  // namespace

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const float> payload) {
  write_impl(path, std::move(header), payload);
}

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const double> payload) {
  write_impl(path, std::move(header), payload);
}

Container read_container(const std::filesystem::path& path) {
  Container result;
  read_impl(path, result.header, result.payload);
  return result;
}

Container64 read_container64(const std::filesystem::path& path) {
  Container64 result;
  read_impl(path, result.header, result.payload);
  return result;
}

}  // namespace scenemem
