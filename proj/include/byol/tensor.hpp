#pragma once

// Named-tensor checkpoints and their on-disk archive.
//
// Archive layout (little-endian):
//   "BYOLTNS1"  u64 tensor count
//   per tensor: u16 name length, name bytes, u8 dtype (0=f32, 1=f16),
//               u8 rank, rank x u64 dims
//   raw row-major buffers in header order
//   u64 metadata length, then "key=value\n" lines

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "byol/error.hpp"

namespace byol::tensor {

enum class DType : std::uint8_t { f32 = 0, f16 = 1 };
std::string_view to_string(DType d);
std::size_t element_size(DType d);

// IEEE binary16 conversion, round to nearest even. Overflow gives infinity.
std::uint16_t float_to_half(float f);
float half_to_float(std::uint16_t h);

// Rounds `v` to the nearest value representable in `d`.
float quantize(double v, DType d);

// Elements are held as float; for f16 tensors every element is exactly
// representable as a half.
struct NamedTensor {
  std::vector<std::uint64_t> shape;
  DType dtype = DType::f32;
  std::vector<float> data;

  std::uint64_t element_count() const;
  // Throws ContractViolation naming the tensor.
  void validate(std::string_view name) const;
};

struct TensorCheckpoint {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  void validate() const;
  // SHA-256 over names, dtypes, shapes and element bytes. Metadata excluded.
  std::string fingerprint() const;
};

enum class ArchiveErrorKind { corrupt_header, truncated_buffer, non_finite_element };
std::string_view to_string(ArchiveErrorKind k);

class ArchiveError : public Error {
 public:
  ArchiveError(ArchiveErrorKind kind, std::string tensor, const std::string& what)
      : Error(std::string(to_string(kind)) + (tensor.empty() ? "" : " in tensor '" + tensor + "'") +
              ": " + what),
        kind_(kind),
        tensor_(std::move(tensor)),
        detail_(what) {}
  ArchiveErrorKind kind() const noexcept { return kind_; }
  const std::string& tensor() const noexcept { return tensor_; }
  const std::string& detail() const noexcept { return detail_; }
  ExitCode exit_code() const noexcept override { return ExitCode::io_failure; }

 private:
  ArchiveErrorKind kind_;
  std::string tensor_;
  std::string detail_;
};

std::string serialize(const TensorCheckpoint& ckpt);
TensorCheckpoint deserialize(std::string_view bytes);

TensorCheckpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const TensorCheckpoint& ckpt, const std::filesystem::path& path);

}  // namespace byol::tensor
