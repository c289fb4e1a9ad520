#include "xncaps/idx.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace xncaps {

namespace {

[[noreturn]] void fail(const std::string& path, const char* what, std::size_t offset) {
  throw IoError(path + ": " + what + " at byte offset " + std::to_string(offset));
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset) {
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(std::uint8_t(v >> 24));
  buf.push_back(std::uint8_t(v >> 16));
  buf.push_back(std::uint8_t(v >> 8));
  buf.push_back(std::uint8_t(v));
}

}  // namespace

IdxData idx_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 4) fail(path, "truncated header", buf.size());
  if (buf[0] != 0 || buf[1] != 0) fail(path, "bad magic", 0);
  if (buf[2] != 0x08) fail(path, "unsupported element type (only unsigned byte 0x08)", 2);
  const std::size_t ndim = buf[3];
  if (ndim == 0) fail(path, "bad magic (zero dimensions)", 3);
  if (buf.size() < 4 + 4 * ndim) fail(path, "truncated dimension list", buf.size());

  IdxData data;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    const std::size_t offset = 4 + 4 * d;
    const std::uint32_t len = read_be32(buf, offset);
    if (len == 0) fail(path, "zero-length dimension", offset);
    if (std::size_t(len) > std::numeric_limits<std::size_t>::max() / total)
      fail(path, "dimension overflow", offset);
    total *= len;
    data.dims.push_back(len);
  }
  const std::size_t header = 4 + 4 * ndim;
  if (buf.size() < header + total) fail(path, "truncated data", buf.size());
  if (buf.size() > header + total) fail(path, "trailing bytes after data", header + total);
  data.bytes.assign(buf.begin() + header, buf.end());
  return data;
}

void idx_write(const std::string& path, const IdxData& data) {
  if (data.dims.empty() || data.dims.size() > 255)
    throw IoError(path + ": IDX dimension count must be in [1, 255]");
  std::size_t total = 1;
  std::vector<std::uint8_t> buf;
  buf.push_back(0);
  buf.push_back(0);
  buf.push_back(0x08);
  buf.push_back(std::uint8_t(data.dims.size()));
  for (std::size_t d : data.dims) {
    if (d == 0 || d > std::numeric_limits<std::uint32_t>::max())
      throw IoError(path + ": IDX dimension out of range");
    total *= d;
    write_be32(buf, std::uint32_t(d));
  }
  if (total != data.bytes.size())
    throw IoError(path + ": payload size does not match dimensions");
  buf.insert(buf.end(), data.bytes.begin(), data.bytes.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError(path + ": write failed");
}

LabeledImages idx_load(const std::string& images_path, const std::string& labels_path) {
  const IdxData raw_images = idx_read(images_path);
  if (raw_images.dims.size() != 3)
    throw IoError(images_path + ": expected 3 dimensions [n, h, w], got " +
                  std::to_string(raw_images.dims.size()));
  const std::size_t n = raw_images.dims[0], h = raw_images.dims[1], w = raw_images.dims[2];

  const IdxData raw_labels = idx_read(labels_path);
  if (raw_labels.dims.size() != 1 && raw_labels.dims.size() != 2)
    throw IoError(labels_path + ": expected 1 or 2 dimensions, got " +
                  std::to_string(raw_labels.dims.size()));
  if (raw_labels.dims[0] != n)
    throw IoError(labels_path + ": label count " + std::to_string(raw_labels.dims[0]) +
                  " does not match image count " + std::to_string(n));
  const std::size_t per_image = raw_labels.dims.size() == 2 ? raw_labels.dims[1] : 1;
  if (per_image < 1 || per_image > 2)
    throw IoError(labels_path + ": unsupported labels per image: " + std::to_string(per_image));

  LabeledImages out;
  out.images = DenseTensor(Shape{n, h, w, 1});
  for (std::size_t i = 0; i < raw_images.bytes.size(); ++i)
    out.images[i] = float(raw_images.bytes[i]) / 255.0f;
  out.labels.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < per_image; ++k) {
      const std::size_t label = raw_labels.bytes[i * per_image + k];
      out.labels[i].push_back(label);
      max_label = std::max(max_label, label);
    }
  }
  out.class_count = std::max<std::size_t>(10, max_label + 1);
  return out;
}

IdxData idx_encode_images(const DenseTensor& images) {
  const Shape& s = images.shape();
  if (s.rank() != 4 || s[3] != 1)
    throw IoError("idx_encode_images: expected [n, h, w, 1], got " + s.str());
  IdxData data;
  data.dims = {s[0], s[1], s[2]};
  data.bytes.resize(images.numel());
  for (std::size_t i = 0; i < images.numel(); ++i)
    data.bytes[i] = std::uint8_t(std::lround(images[i] * 255.0f));
  return data;
}

IdxData idx_encode_labels(const std::vector<std::vector<std::size_t>>& labels) {
  if (labels.empty()) throw IoError("idx_encode_labels: no labels");
  const std::size_t per_image = labels.front().size();
  if (per_image < 1 || per_image > 2)
    throw IoError("idx_encode_labels: labels per image must be 1 or 2");
  IdxData data;
  data.dims = per_image == 1 ? std::vector<std::size_t>{labels.size()}
                             : std::vector<std::size_t>{labels.size(), per_image};
  for (const auto& entry : labels) {
    if (entry.size() != per_image) throw IoError("idx_encode_labels: ragged label list");
    for (std::size_t label : entry) {
      if (label > 255) throw IoError("idx_encode_labels: label exceeds one byte");
      data.bytes.push_back(std::uint8_t(label));
    }
  }
  return data;
}

}  // namespace xncaps
