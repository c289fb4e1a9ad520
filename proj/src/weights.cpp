#include "xncaps/weights.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

namespace xncaps {

namespace {
static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

const char kMagic[4] = {'X', 'N', 'C', 'W'};

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
  const std::size_t at = buf.size();
  buf.resize(at + sizeof(T));
  std::memcpy(buf.data() + at, &value, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& path, std::vector<std::uint8_t> buf)
      : path_(path), buf_(std::move(buf)) {}

  template <typename T>
  T get() {
    need(sizeof(T), "truncated archive");
    T value;
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) fail(what);
  }

  std::string path_;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

std::uint32_t payload_crc(const DenseTensor& t) {
  return std::uint32_t(
      crc32(0, reinterpret_cast<const Bytef*>(t.data()), uInt(t.numel() * sizeof(float))));
}

}  // namespace

void WeightArchive::add(std::string name, DenseTensor tensor) {
  if (contains(name)) throw IoError("WeightArchive: duplicate tensor name \"" + name + "\"");
  tensors.push_back(NamedTensor{std::move(name), std::move(tensor)});
}

const DenseTensor& WeightArchive::get(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw IoError("WeightArchive: missing tensor \"" + name + "\"");
}

bool WeightArchive::contains(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

void save_weights(const WeightArchive& archive, const std::string& path) {
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(buf, WeightArchive::kVersion);
  put<std::uint32_t>(buf, std::uint32_t(archive.tensors.size()));
  for (const auto& entry : archive.tensors) {
    put<std::uint32_t>(buf, std::uint32_t(entry.name.size()));
    buf.insert(buf.end(), entry.name.begin(), entry.name.end());
    const Shape& shape = entry.tensor.shape();
    put<std::uint32_t>(buf, std::uint32_t(shape.rank()));
    for (std::size_t d = 0; d < shape.rank(); ++d) put<std::uint64_t>(buf, shape[d]);
    const std::size_t at = buf.size();
    buf.resize(at + entry.tensor.numel() * sizeof(float));
    std::memcpy(buf.data() + at, entry.tensor.data(), entry.tensor.numel() * sizeof(float));
    put<std::uint32_t>(buf, payload_crc(entry.tensor));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError(path + ": write failed");
}

WeightArchive load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  Reader r(path, std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>()));

  const std::uint8_t* magic = r.take(4, "truncated magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + ": not a weight archive (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != WeightArchive::kVersion)
    throw IoError(path + ": unsupported archive version " + std::to_string(version));

  WeightArchive archive;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    const std::uint8_t* name_bytes = r.take(name_len, "truncated tensor name");
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);

    const auto rank = r.get<std::uint32_t>();
    std::vector<std::size_t> dims;
    for (std::uint32_t d = 0; d < rank; ++d) dims.push_back(std::size_t(r.get<std::uint64_t>()));
    Shape shape;
    try {
      shape = Shape(std::move(dims));
    } catch (const ShapeError&) {
      r.fail("invalid tensor dimensions");
    }
    const std::size_t numel = shape.numel();
    if (numel > r.remaining() / sizeof(float)) r.fail("truncated tensor payload");

    const std::uint8_t* payload = r.take(numel * sizeof(float), "truncated tensor payload");
    const std::uint32_t want_crc =
        std::uint32_t(crc32(0, reinterpret_cast<const Bytef*>(payload), uInt(numel * sizeof(float))));
    std::vector<float> values(numel);
    std::memcpy(values.data(), payload, numel * sizeof(float));
    const auto stored_crc = r.get<std::uint32_t>();
    if (stored_crc != want_crc)
      throw IoError(path + ": checksum mismatch for tensor \"" + name + "\"");

    archive.add(std::move(name), DenseTensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last tensor");
  return archive;
}

}  // namespace xncaps
