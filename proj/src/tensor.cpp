#include "byol/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "byol/digest.hpp"
#include "byol/io.hpp"
#include "byol/text.hpp"

namespace byol::tensor {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {
constexpr std::string_view kMagic = "BYOLTNS1";
}

std::string_view to_string(DType d) { return d == DType::f16 ? "f16" : "f32"; }

std::size_t element_size(DType d) { return d == DType::f16 ? 2 : 4; }

std::string_view to_string(ArchiveErrorKind k) {
  switch (k) {
    case ArchiveErrorKind::corrupt_header: return "corrupt header";
    case ArchiveErrorKind::truncated_buffer: return "truncated buffer";
    case ArchiveErrorKind::non_finite_element: return "non-finite element";
  }
  return "?";
}

std::uint16_t float_to_half(float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  const std::uint32_t exp = (bits >> 23) & 0xFFu;
  std::uint32_t mant = bits & 0x7FFFFFu;
  if (exp == 0xFF) return sign | 0x7C00u | (mant ? 0x200u : 0u);
  const int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 0x1F) return sign | 0x7C00u;
  if (e <= 0) {
    if (e < -10) return sign;
    mant |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t half = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t mid = 1u << (shift - 1);
    if (rem > mid || (rem == mid && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  std::uint32_t half = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1FFFu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;  // may carry into inf
  return static_cast<std::uint16_t>(sign | half);
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  const std::uint32_t mant = h & 0x3FFu;
  if (exp == 0) {
    const float v = std::ldexp(static_cast<float>(mant), -24);
    return sign ? -v : v;
  }
  if (exp == 0x1F) return std::bit_cast<float>(sign | 0x7F800000u | (mant << 13));
  return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

float quantize(double v, DType d) {
  const auto f = static_cast<float>(v);
  return d == DType::f16 ? half_to_float(float_to_half(f)) : f;
}

std::uint64_t NamedTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void NamedTensor::validate(std::string_view name) const {
  const std::string where = "tensor '" + std::string(name) + "'";
  for (auto d : shape) {
    if (d == 0) throw ContractViolation(where + ": dimensions must be positive");
  }
  if (data.size() != element_count()) {
    throw ContractViolation(where + ": buffer holds " + std::to_string(data.size()) +
                            " elements, shape implies " + std::to_string(element_count()));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw ContractViolation(where + ": non-finite element at index " + std::to_string(i));
    }
  }
}

void TensorCheckpoint::validate() const {
  if (tensors.empty()) throw ContractViolation("checkpoint has no tensors");
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.size() > 0xFFFF) {
      throw ContractViolation("tensor names must be 1..65535 bytes");
    }
    if (t.shape.size() > 0xFF) throw ContractViolation("tensor '" + name + "': rank above 255");
    t.validate(name);
  }
  for (const auto& [k, v] : metadata) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractViolation("metadata key '" + k + "' or its value is not representable");
    }
  }
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

void put_buffer(std::string& out, const NamedTensor& t) {
  if (t.dtype == DType::f32) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * 4);
    return;
  }
  for (float f : t.data) {
    const std::uint16_t h = float_to_half(f);
    char b[2];
    std::memcpy(b, &h, 2);
    out.append(b, 2);
  }
}

}  // namespace

std::string TensorCheckpoint::fingerprint() const {
  Sha256 h;
  std::string buf;
  for (const auto& [name, t] : tensors) {
    h.field(name).field(to_string(t.dtype));
    buf.clear();
    for (auto d : t.shape) put_u64(buf, d);
    h.field(buf);
    buf.clear();
    put_buffer(buf, t);
    h.field(buf);
  }
  return h.hex();
}

std::string serialize(const TensorCheckpoint& ckpt) {
  ckpt.validate();
  std::string out(kMagic);
  put_u64(out, ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    const auto len = static_cast<std::uint16_t>(name.size());
    char b[2];
    std::memcpy(b, &len, 2);
    out.append(b, 2);
    out += name;
    out.push_back(static_cast<char>(t.dtype));
    out.push_back(static_cast<char>(t.shape.size()));
    for (auto d : t.shape) put_u64(out, d);
  }
  for (const auto& [name, t] : ckpt.tensors) put_buffer(out, t);
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) meta += k + "=" + v + "\n";
  put_u64(out, meta.size());
  out += meta;
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool take(void* dst, std::size_t n) {
    if (remaining() < n) return false;
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
    return true;
  }
  std::string_view view(std::size_t n) {
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct HeaderEntry {
  std::string name;
  NamedTensor tensor;
};

}  // namespace

TensorCheckpoint deserialize(std::string_view bytes) {
  using K = ArchiveErrorKind;
  Reader r(bytes);
  char magic[8];
  if (!r.take(magic, 8) || std::string_view(magic, 8) != kMagic) {
    throw ArchiveError(K::corrupt_header, "", "bad magic bytes");
  }
  std::uint64_t count = 0;
  if (!r.take(&count, 8)) throw ArchiveError(K::corrupt_header, "", "missing tensor count");
  if (count == 0) throw ArchiveError(K::corrupt_header, "", "archive holds no tensors");
  // Each header entry needs at least 4 bytes.
  if (count > r.remaining() / 4) {
    throw ArchiveError(K::corrupt_header, "", "tensor count " + std::to_string(count) + " exceeds file size");
  }

  std::vector<HeaderEntry> entries;
  std::set<std::string, std::less<>> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string at = "entry " + std::to_string(i);
    std::uint16_t len = 0;
    if (!r.take(&len, 2) || len == 0 || r.remaining() < len) {
      throw ArchiveError(K::corrupt_header, "", at + ": bad name length");
    }
    HeaderEntry e;
    e.name = std::string(r.view(len));
    if (text::find_invalid_utf8(e.name)) throw ArchiveError(K::corrupt_header, "", at + ": name is not UTF-8");
    if (!seen.insert(e.name).second) throw ArchiveError(K::corrupt_header, e.name, "duplicate tensor name");
    std::uint8_t dtype = 0, rank = 0;
    if (!r.take(&dtype, 1) || !r.take(&rank, 1)) throw ArchiveError(K::corrupt_header, e.name, "missing dtype or rank");
    if (dtype > 1) throw ArchiveError(K::corrupt_header, e.name, "unknown dtype code " + std::to_string(dtype));
    e.tensor.dtype = static_cast<DType>(dtype);
    std::uint64_t elements = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      std::uint64_t dim = 0;
      if (!r.take(&dim, 8)) throw ArchiveError(K::corrupt_header, e.name, "missing dimension");
      if (dim == 0) throw ArchiveError(K::corrupt_header, e.name, "zero dimension");
      if (elements > std::numeric_limits<std::uint64_t>::max() / dim) {
        throw ArchiveError(K::corrupt_header, e.name, "shape overflows");
      }
      elements *= dim;
      e.tensor.shape.push_back(dim);
    }
    entries.push_back(std::move(e));
  }

  TensorCheckpoint ckpt;
  for (auto& e : entries) {
    auto& t = e.tensor;
    const std::uint64_t n = t.element_count();
    const std::size_t es = element_size(t.dtype);
    if (n > r.remaining() / es) {
      throw ArchiveError(K::truncated_buffer, e.name,
                         "needs " + std::to_string(n * es) + " bytes, " + std::to_string(r.remaining()) +
                             " remain");
    }
    t.data.resize(n);
    if (t.dtype == DType::f32) {
      r.take(t.data.data(), n * 4);
    } else {
      for (auto& f : t.data) {
        std::uint16_t h = 0;
        r.take(&h, 2);
        f = half_to_float(h);
      }
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (!std::isfinite(t.data[i])) {
        throw ArchiveError(K::non_finite_element, e.name, "element " + std::to_string(i));
      }
    }
    ckpt.tensors.emplace(std::move(e.name), std::move(t));
  }

  std::uint64_t meta_len = 0;
  if (!r.take(&meta_len, 8)) throw ArchiveError(K::corrupt_header, "", "missing metadata block");
  if (meta_len != r.remaining()) {
    throw ArchiveError(K::corrupt_header, "", "metadata length " + std::to_string(meta_len) + " does not match " +
                                                  std::to_string(r.remaining()) + " trailing bytes");
  }
  std::string_view meta = r.view(meta_len);
  while (!meta.empty()) {
    const auto nl = meta.find('\n');
    std::string_view line = meta.substr(0, nl);
    meta.remove_prefix(nl == std::string_view::npos ? meta.size() : nl + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ArchiveError(K::corrupt_header, "", "metadata line without key=value");
    }
    ckpt.metadata[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return ckpt;
}

TensorCheckpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize(io::read_file(path));
  } catch (const ArchiveError& e) {
    throw ArchiveError(e.kind(), e.tensor(), path.string() + ": " + e.detail());
  }
}

void save_checkpoint(const TensorCheckpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, serialize(ckpt));
}

}  // namespace byol::tensor
