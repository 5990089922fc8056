#include "nhns/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nhns/error.hpp"

namespace nhns {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

}  // namespace

void ByteWriter::put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

void ByteWriter::put_u32(std::uint32_t v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf_.insert(buf_.end(), p, p + sizeof v);
}

void ByteWriter::put_f64(double v) {
  auto bits = to_little(std::bit_cast<std::uint64_t>(v));
  const auto* p = reinterpret_cast<const std::uint8_t*>(&bits);
  buf_.insert(buf_.end(), p, p + sizeof bits);
}

void ByteWriter::put_f64s(std::span<const double> v) {
  buf_.reserve(buf_.size() + 8 * v.size());
  for (double x : v) put_f64(x);
}

void ByteReader::need(std::size_t count) const {
  if (remaining() < count) throw FormatError("truncated payload");
}

std::string_view ByteReader::peek(std::size_t count) const {
  need(count);
  return {reinterpret_cast<const char*>(bytes_.data() + pos_), count};
}

void ByteReader::expect_magic(std::string_view magic, const char* what) {
  if (remaining() < magic.size() || peek(magic.size()) != magic)
    throw FormatError(std::string("bad magic for ") + what);
  pos_ += magic.size();
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, bytes_.data() + pos_, 4);
  pos_ += 4;
  return to_little(v);
}

double ByteReader::get_f64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, bytes_.data() + pos_, 8);
  pos_ += 8;
  return std::bit_cast<double>(to_little(v));
}

void ByteReader::get_f64s(std::span<double> out) {
  need(8 * out.size());
  for (double& x : out) x = get_f64();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

namespace {

GridSpec read_grid(ByteReader& r) {
  const std::uint32_t dim = r.get_u32();
  const std::uint32_t n = r.get_u32();
  if (dim != 1 && dim != 2) throw FormatError("unsupported dimension in container");
  if (n < 3) throw FormatError("grid size in container is below 3");
  return GridSpec(static_cast<int>(dim), n);
}

Field read_field_values(ByteReader& r, const GridSpec& g) {
  std::vector<double> v(g.size());
  r.get_f64s(v);
  return Field(g, std::move(v));
}

}  // namespace

std::vector<std::uint8_t> encode_field(const Field& u) {
  ByteWriter w;
  w.put_bytes(kFieldMagic);
  w.put_u32(kFieldVersion);
  w.put_u32(0);
  w.put_u32(static_cast<std::uint32_t>(u.grid().dim()));
  w.put_u32(static_cast<std::uint32_t>(u.grid().n()));
  w.put_f64s(u.values());
  return w.take();
}

Field decode_field(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kFieldMagic, "field");
  if (r.get_u32() != kFieldVersion) throw FormatError("unsupported field container version");
  r.get_u32();
  const GridSpec g = read_grid(r);
  Field u = read_field_values(r, g);
  if (!r.at_end()) throw FormatError("trailing bytes after field payload");
  return u;
}

void save_field(const std::filesystem::path& path, const Field& u) { write_file(path, encode_field(u)); }

Field load_field(const std::filesystem::path& path) { return decode_field(read_file(path)); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string field_to_csv(const Field& u) {
  std::string out;
  out.reserve(u.size() * 24);
  for (double v : u.values()) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(std::span<const Field> fields) {
  if (fields.empty()) throw DomainError("dataset must contain at least one field");
  const GridSpec& g = fields.front().grid();
  ByteWriter w;
  w.put_bytes(kDatasetMagic);
  w.put_u32(static_cast<std::uint32_t>(g.dim()));
  w.put_u32(static_cast<std::uint32_t>(g.n()));
  w.put_u32(static_cast<std::uint32_t>(fields.size()));
  for (const Field& f : fields) {
    if (!(f.grid() == g)) throw DimensionError("dataset fields must share one grid");
    w.put_f64s(f.values());
  }
  return w.take();
}

std::vector<Field> decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kDatasetMagic, "dataset");
  const GridSpec g = read_grid(r);
  const std::uint32_t count = r.get_u32();
  if (r.remaining() != static_cast<std::size_t>(count) * g.size() * 8)
    throw FormatError("dataset payload size does not match header");
  std::vector<Field> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_field_values(r, g));
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const Field> fields) {
  write_file(path, encode_dataset(fields));
}

std::vector<Field> load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace nhns
