#include "ccdf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

constexpr char kMagic[8] = {'C', 'C', 'D', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const std::vector<NamedArray>& arrays) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (ad::numel(a.shape) != a.data.size()) {
      throw ShapeError("checkpoint array '" + a.name + "' has shape " +
                       ad::to_string(a.shape) + " but " + std::to_string(a.data.size()) +
                       " values");
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::uint64_t>(out, d);
    for (double v : a.data) put<double>(out, v);
  }
  return out;
}

std::vector<NamedArray> deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name = in.take(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) a.shape.push_back(in.get<std::uint64_t>());
    a.data.resize(ad::numel(a.shape));
    for (auto& v : a.data) v = in.get<double>();
    arrays.push_back(std::move(a));
  }
  if (!in.done()) throw ParseError("trailing bytes after last checkpoint array");
  return arrays;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  write_bytes(path, serialize_checkpoint(arrays));
}

std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace ccdf
