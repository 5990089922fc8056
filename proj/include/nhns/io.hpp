#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nhns/grid.hpp"

namespace nhns {

/// Append-only little-endian byte sink.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes);
  void put_u32(std::uint32_t v);
  void put_f64(double v);
  void put_f64s(std::span<const double> v);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view magic, const char* what);
  std::uint32_t get_u32();
  double get_f64();
  void get_f64s(std::span<double> out);
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::string_view peek(std::size_t count) const;

 private:
  void need(std::size_t count) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Field container: "NHNSFLD1", u32 version, u32 reserved, u32 dim, u32 n, n^dim f64.
inline constexpr std::string_view kFieldMagic = "NHNSFLD1";
inline constexpr std::uint32_t kFieldVersion = 1;

std::vector<std::uint8_t> encode_field(const Field& u);
Field decode_field(std::span<const std::uint8_t> bytes);
void save_field(const std::filesystem::path& path, const Field& u);
Field load_field(const std::filesystem::path& path);
/// One value per line, row-major, shortest round-trip formatting.
std::string field_to_csv(const Field& u);

/// Dataset container: "NHNSDAT1", u32 dim, u32 n, u32 count, count * n^dim f64.
inline constexpr std::string_view kDatasetMagic = "NHNSDAT1";

std::vector<std::uint8_t> encode_dataset(std::span<const Field> fields);
std::vector<Field> decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, std::span<const Field> fields);
std::vector<Field> load_dataset(const std::filesystem::path& path);

/// Formats a double so that parsing it back yields the same value.
std::string format_double(double v);

}  // namespace nhns
