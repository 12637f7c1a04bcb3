#pragma once

// Linear weight-space arithmetic over checkpoints with identical structure:
//   out = g_pt + alpha (g_it - g_pt) + beta (expert - g_pt)

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byol/error.hpp"
#include "byol/tensor.hpp"

namespace byol::merge {

using tensor::TensorCheckpoint;

enum class MismatchKind { name_set, shape, dtype, non_finite_result };
std::string_view to_string(MismatchKind k);

class MergeError : public ContractViolation {
 public:
  MergeError(MismatchKind kind, const std::string& what)
      : ContractViolation(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  MismatchKind kind() const noexcept { return kind_; }

 private:
  MismatchKind kind_;
};

struct MergeRecipe {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> lambda;  // set when built by from_lambda

  // alpha and beta must be finite and non-negative.
  static MergeRecipe from_coefficients(double alpha, double beta);
  // alpha = 1 - lambda, beta = lambda; lambda must lie in [0, 1].
  static MergeRecipe from_lambda(double lambda);
};

// Throws MergeError when the checkpoints differ in name set, shape or dtype.
void require_same_structure(std::span<const TensorCheckpoint* const> ckpts);

// Tensors are distributed over OpenMP workers; output is independent of the
// schedule. Metadata records the recipe and input fingerprints.
TensorCheckpoint merge(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                       const TensorCheckpoint& expert, const MergeRecipe& recipe);
// Single-threaded reference.
TensorCheckpoint merge_serial(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                              const TensorCheckpoint& expert, const MergeRecipe& recipe);

TensorCheckpoint lambda_merge(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                              const TensorCheckpoint& expert, double lambda);

// Elementwise arithmetic mean in double precision.
TensorCheckpoint average_checkpoints(std::span<const TensorCheckpoint> ckpts);
TensorCheckpoint average_checkpoints_serial(std::span<const TensorCheckpoint> ckpts);

struct SweepSpec {
  std::vector<double> lambdas;
  std::string pattern = "merged_lambda_{lambda}.byt";  // relative to the output directory

  void validate() const;
  std::string file_name(double lambda) const;
};

// "start:stop:step" (inclusive of stop) or a comma-separated list.
std::vector<double> parse_lambda_grid(std::string_view text);

struct SweepEntry {
  double lambda;
  std::filesystem::path file;
  std::string fingerprint;
};

struct SweepManifest {
  std::vector<SweepEntry> entries;  // grid order
  std::string json() const;
};

// Writes one checkpoint per lambda under `out_dir`. On failure every output
// written so far is removed before the error propagates.
SweepManifest sweep(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                    const TensorCheckpoint& expert, const SweepSpec& spec,
                    const std::filesystem::path& out_dir);

}  // namespace byol::merge
