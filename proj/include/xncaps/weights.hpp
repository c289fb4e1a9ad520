#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xncaps/tensor.hpp"

namespace xncaps {

struct NamedTensor {
  std::string name;
  DenseTensor tensor;
};

/// Named tensors serialized with per-payload checksums; the round trip is
/// bit-exact.
struct WeightArchive {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<NamedTensor> tensors;

  /// Appends a tensor; duplicate names are rejected.
  void add(std::string name, DenseTensor tensor);

  /// The tensor with this name, or throws IoError.
  const DenseTensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

/// Binary layout: magic "XNCW", u32 version, u32 tensor count; per tensor
/// u32 name length + bytes, u32 rank, u64 dims, little-endian f32 payload,
/// u32 CRC32 of the payload bytes. All integers little-endian.
void save_weights(const WeightArchive& archive, const std::string& path);
WeightArchive load_weights(const std::string& path);

}  // namespace xncaps
