#include "stackssl/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace stackssl {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'E', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kMaxNameBytes = 64;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    if constexpr (std::is_floating_point_v<T>) {
      using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
      put(std::bit_cast<Bits>(value));
    } else {
      for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
      }
    }
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if constexpr (std::is_floating_point_v<T>) {
      using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
      return std::bit_cast<T>(get<Bits>(what));
    } else {
      need(sizeof(T), what);
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
      pos_ += sizeof(T);
      return static_cast<T>(v);
    }
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw TensorFileError(TensorFileError::Kind::truncated, std::string("truncated payload while reading ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void validate_name(const std::string& name) {
  if (name.empty() || name.size() > kMaxNameBytes) {
    throw TensorFileError(TensorFileError::Kind::bad_name,
                          "entry name must be 1.." + std::to_string(kMaxNameBytes) + " bytes: '" + name + "'");
  }
  for (unsigned char c : name) {
    if (c < 0x20 || c > 0x7E) throw TensorFileError(TensorFileError::Kind::bad_name, "entry name is not printable ASCII");
  }
}

}  // namespace

std::size_t TensorEntry::element_count() const { return stackssl::element_count(shape); }

std::vector<std::uint8_t> encode_tensor_file(std::span<const TensorEntry> entries) {
  std::set<std::string> seen;
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    validate_name(e.name);
    if (!seen.insert(e.name).second) {
      throw TensorFileError(TensorFileError::Kind::duplicate_name, "duplicate entry name '" + e.name + "'");
    }
    if (e.shape.size() > 255) throw TensorFileError(TensorFileError::Kind::bad_dtype, "rank exceeds 255");
    const std::size_t stored = std::visit([](const auto& v) { return v.size(); }, e.data);
    if (stored != e.element_count()) {
      throw ShapeError("entry '" + e.name + "' has " + std::to_string(stored) + " values for shape " +
                       shape_string(e.shape));
    }
    w.put(static_cast<std::uint16_t>(e.name.size()));
    w.put_bytes(e.name.data(), e.name.size());
    w.put(static_cast<std::uint8_t>(e.dtype()));
    w.put(static_cast<std::uint8_t>(e.shape.size()));
    for (std::size_t extent : e.shape) w.put(static_cast<std::uint64_t>(extent));
    std::visit(
        [&w](const auto& v) {
          for (auto x : v) w.put(x);
        },
        e.data);
  }
  return w.take();
}

std::vector<TensorEntry> decode_tensor_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw TensorFileError(TensorFileError::Kind::bad_magic, "bad magic: not an LTEN tensor file");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw TensorFileError(TensorFileError::Kind::bad_version, "unsupported LTEN version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("entry count");
  std::vector<TensorEntry> entries;
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    TensorEntry e;
    const auto name_len = r.get<std::uint16_t>("name length");
    auto name = r.get_bytes(name_len, "name");
    e.name.assign(name.begin(), name.end());
    if (!seen.insert(e.name).second) {
      throw TensorFileError(TensorFileError::Kind::duplicate_name, "duplicate entry name '" + e.name + "'");
    }
    const auto dtype = r.get<std::uint8_t>("dtype");
    const auto rank = r.get<std::uint8_t>("rank");
    std::uint64_t n = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const auto extent = r.get<std::uint64_t>("extents");
      e.shape.push_back(static_cast<std::size_t>(extent));
      n *= extent;
    }
    auto read_payload = [&](auto tag) {
      using T = decltype(tag);
      if (n > r.remaining() / sizeof(T)) {
        throw TensorFileError(TensorFileError::Kind::truncated, "truncated payload for entry '" + e.name + "'");
      }
      std::vector<T> v(static_cast<std::size_t>(n));
      for (auto& x : v) x = r.get<T>("payload");
      e.data = std::move(v);
    };
    switch (dtype) {
      case 0: read_payload(double{}); break;
      case 1: read_payload(float{}); break;
      case 2: read_payload(std::uint8_t{}); break;
      default:
        throw TensorFileError(TensorFileError::Kind::bad_dtype, "unknown dtype code " + std::to_string(dtype));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_tensor_file(const std::filesystem::path& path, std::span<const TensorEntry> entries) {
  const auto bytes = encode_tensor_file(entries);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorFileError(TensorFileError::Kind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorFileError(TensorFileError::Kind::io, "write failed for " + path.string());
}

std::vector<TensorEntry> load_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFileError(TensorFileError::Kind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor_file(bytes);
}

const TensorEntry* try_find_entry(std::span<const TensorEntry> entries, const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const TensorEntry& find_entry(std::span<const TensorEntry> entries, const std::string& name) {
  if (const auto* e = try_find_entry(entries, name)) return *e;
  throw std::out_of_range("tensor file has no entry '" + name + "'");
}

TensorEntry make_text_entry(std::string name, const std::string& text) {
  return TensorEntry{std::move(name), {text.size()}, std::vector<std::uint8_t>(text.begin(), text.end())};
}

std::string entry_text(const TensorEntry& e) {
  const auto* bytes = std::get_if<std::vector<std::uint8_t>>(&e.data);
  if (bytes == nullptr) throw std::invalid_argument("entry '" + e.name + "' is not a u8 text entry");
  return std::string(bytes->begin(), bytes->end());
}

}  // namespace stackssl
