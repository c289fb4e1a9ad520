#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xncaps/tensor.hpp"

namespace xncaps {

/// Images with one or two class labels each.
struct LabeledImages {
  DenseTensor images;  // [n, h, w, channels], values in [0, 1]
  std::vector<std::vector<std::size_t>> labels;
  std::size_t class_count = 10;
};

/// Raw IDX payload: unsigned-byte data plus its dimension list.
struct IdxData {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> bytes;
};

/// Parses an IDX file (big-endian magic 0x00 0x00 0x08 ndim, u32 dims, then
/// unsigned bytes). Failures throw IoError naming the byte offset.
IdxData idx_read(const std::string& path);

/// Writes data back in the same layout.
void idx_write(const std::string& path, const IdxData& data);

/// Loads an image file ([n, h, w] bytes) and a label file ([n] bytes for
/// single labels or [n, k] for k labels per image) into normalized images of
/// shape [n, h, w, 1].
LabeledImages idx_load(const std::string& images_path, const std::string& labels_path);

/// Re-encodes loaded images/labels to the byte-exact IDX representation.
IdxData idx_encode_images(const DenseTensor& images);
IdxData idx_encode_labels(const std::vector<std::vector<std::size_t>>& labels);

}  // namespace xncaps
