#pragma once

// LTEN tensor container (little-endian):
//   magic "LTEN" | u32 version = 1 | u32 entry count
//   per entry: u16 name length | name bytes | u8 dtype (0=f64, 1=f32, 2=u8)
//              | u8 rank | u64 extents[rank] | payload, row-major

#include "stackssl/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stackssl {

enum class DType : std::uint8_t { f64 = 0, f32 = 1, u8 = 2 };

struct TensorEntry {
  std::string name;
  Shape shape;
  std::variant<std::vector<double>, std::vector<float>, std::vector<std::uint8_t>> data;

  DType dtype() const { return static_cast<DType>(data.index()); }
  std::size_t element_count() const;

  bool operator==(const TensorEntry&) const = default;
};

class TensorFileError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, duplicate_name, bad_dtype, bad_name };
  TensorFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_tensor_file(std::span<const TensorEntry> entries);
std::vector<TensorEntry> decode_tensor_file(std::span<const std::uint8_t> bytes);

void save_tensor_file(const std::filesystem::path& path, std::span<const TensorEntry> entries);
std::vector<TensorEntry> load_tensor_file(const std::filesystem::path& path);

const TensorEntry& find_entry(std::span<const TensorEntry> entries, const std::string& name);
const TensorEntry* try_find_entry(std::span<const TensorEntry> entries, const std::string& name);

// Stores a tensor with the dtype matching Scalar (f64 for double, f32 for float).
template <typename Scalar>
TensorEntry make_entry(std::string name, const Tensor<Scalar>& t) {
  std::vector<Scalar> v(t.values().data(), t.values().data() + t.size());
  return TensorEntry{std::move(name), t.shape(), std::move(v)};
}

TensorEntry make_text_entry(std::string name, const std::string& text);
std::string entry_text(const TensorEntry& e);

// Converts any numeric entry to a Tensor of the requested scalar type.
template <typename Scalar>
Tensor<Scalar> to_tensor(const TensorEntry& e) {
  Array<Scalar> values(static_cast<Eigen::Index>(e.element_count()));
  std::visit(
      [&values](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) values[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(v[i]);
      },
      e.data);
  return Tensor<Scalar>(e.shape, std::move(values));
}

}  // namespace stackssl
