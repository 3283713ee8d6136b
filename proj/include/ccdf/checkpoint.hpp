#pragma once

// Binary parameter checkpoint.
//
//   magic   8 bytes  "CCDFCKPT"
//   version u32      1
//   count   u32      number of arrays
//   per array:
//     name_len u32, name (name_len bytes, UTF-8, no terminator)
//     rank     u32, dims (rank x u64)
//     data     prod(dims) x f64
//
// All integers and reals are little-endian.

#include <filesystem>
#include <string>
#include <vector>

#include "ccdf/autodiff.hpp"

namespace ccdf {

struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<double> data;

  bool operator==(const NamedArray&) const = default;
};

std::string serialize_checkpoint(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
void write_bytes(const std::filesystem::path& path, const std::string& bytes);
std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path);

}  // namespace ccdf
