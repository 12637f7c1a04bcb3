#include "byol/merge.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include "byol/io.hpp"

namespace byol::merge {

using tensor::NamedTensor;

std::string_view to_string(MismatchKind k) {
  switch (k) {
    case MismatchKind::name_set: return "name-set mismatch";
    case MismatchKind::shape: return "shape mismatch";
    case MismatchKind::dtype: return "dtype mismatch";
    case MismatchKind::non_finite_result: return "non-finite result";
  }
  return "?";
}

MergeRecipe MergeRecipe::from_coefficients(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
    throw ContractViolation("merge coefficients must be finite and non-negative, got alpha=" +
                            io::shortest(alpha) + " beta=" + io::shortest(beta));
  }
  return {alpha, beta, std::nullopt};
}

MergeRecipe MergeRecipe::from_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ContractViolation("lambda must lie in [0, 1], got " + io::shortest(lambda));
  }
  return {1.0 - lambda, lambda, lambda};
}

namespace {

std::string shape_string(const NamedTensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) s += (i ? "," : "") + std::to_string(t.shape[i]);
  return s + "]";
}

}  // namespace

void require_same_structure(std::span<const TensorCheckpoint* const> ckpts) {
  if (ckpts.empty()) throw ContractViolation("no checkpoints given");
  const TensorCheckpoint& ref = *ckpts.front();
  ref.validate();
  for (std::size_t c = 1; c < ckpts.size(); ++c) {
    const TensorCheckpoint& other = *ckpts[c];
    other.validate();
    std::vector<std::string> diff;
    for (const auto& [name, _] : ref.tensors) {
      if (!other.tensors.count(name)) diff.push_back(name);
    }
    for (const auto& [name, _] : other.tensors) {
      if (!ref.tensors.count(name)) diff.push_back(name);
    }
    if (!diff.empty()) {
      std::sort(diff.begin(), diff.end());
      std::string names;
      for (const auto& n : diff) names += (names.empty() ? "" : ", ") + n;
      throw MergeError(MismatchKind::name_set,
                       "checkpoint " + std::to_string(c) + " differs from checkpoint 0 in: " + names);
    }
    for (const auto& [name, t] : ref.tensors) {
      const NamedTensor& o = other.tensors.at(name);
      if (o.shape != t.shape) {
        throw MergeError(MismatchKind::shape, "tensor '" + name + "' " + shape_string(t) + " vs " +
                                                  shape_string(o));
      }
      if (o.dtype != t.dtype) {
        throw MergeError(MismatchKind::dtype, "tensor '" + name + "' " +
                                                  std::string(tensor::to_string(t.dtype)) + " vs " +
                                                  std::string(tensor::to_string(o.dtype)));
      }
    }
  }
}

namespace {

// Computes one output tensor per name of `ref`; `kernel(name, out)` fills it.
template <typename Kernel>
std::map<std::string, NamedTensor> per_tensor(const TensorCheckpoint& ref, bool parallel, Kernel kernel) {
  std::vector<const std::string*> names;
  for (const auto& [name, _] : ref.tensors) names.push_back(&name);
  const auto n = static_cast<std::ptrdiff_t>(names.size());
  std::vector<NamedTensor> outs(names.size());
  std::vector<std::exception_ptr> errors(names.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      kernel(*names[i], outs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Report the first failing tensor in name order, whatever the schedule.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::map<std::string, NamedTensor> result;
  for (std::size_t i = 0; i < names.size(); ++i) result.emplace(*names[i], std::move(outs[i]));
  return result;
}

void store(NamedTensor& out, std::size_t i, double v, const std::string& name) {
  out.data[i] = tensor::quantize(v, out.dtype);
  if (!std::isfinite(out.data[i])) {
    throw MergeError(MismatchKind::non_finite_result,
                     "tensor '" + name + "' element " + std::to_string(i) + " is not representable");
  }
}

TensorCheckpoint merge_impl(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                            const TensorCheckpoint& expert, const MergeRecipe& recipe, bool parallel) {
  const TensorCheckpoint* all[] = {&g_pt, &g_it, &expert};
  require_same_structure(all);
  const double a = recipe.alpha, b = recipe.beta;
  // Weighted-sum form: exact at the endpoints (a, b) = (1, 0) and (0, 1).
  const double w_pt = 1.0 - a - b;
  TensorCheckpoint out;
  out.tensors = per_tensor(g_pt, parallel, [&](const std::string& name, NamedTensor& o) {
    const NamedTensor& pt = g_pt.tensors.at(name);
    const NamedTensor& it = g_it.tensors.at(name);
    const NamedTensor& ex = expert.tensors.at(name);
    o.shape = pt.shape;
    o.dtype = pt.dtype;
    o.data.resize(pt.data.size());
    for (std::size_t i = 0; i < o.data.size(); ++i) {
      const double v = w_pt * pt.data[i] + a * static_cast<double>(it.data[i]) +
                       b * static_cast<double>(ex.data[i]);
      store(o, i, v, name);
    }
  });
  out.metadata = {
      {"role", "merged"},
      {"alpha", io::shortest(a)},
      {"beta", io::shortest(b)},
      {"g_pt_fingerprint", g_pt.fingerprint()},
      {"g_it_fingerprint", g_it.fingerprint()},
      {"expert_fingerprint", expert.fingerprint()},
  };
  if (recipe.lambda) out.metadata["lambda"] = io::shortest(*recipe.lambda);
  return out;
}

TensorCheckpoint average_impl(std::span<const TensorCheckpoint> ckpts, bool parallel) {
  if (ckpts.empty()) throw ContractViolation("average_checkpoints needs at least one checkpoint");
  std::vector<const TensorCheckpoint*> ptrs;
  for (const auto& c : ckpts) ptrs.push_back(&c);
  require_same_structure(ptrs);
  const double n = static_cast<double>(ckpts.size());
  TensorCheckpoint out;
  out.tensors = per_tensor(ckpts.front(), parallel, [&](const std::string& name, NamedTensor& o) {
    const NamedTensor& first = ckpts.front().tensors.at(name);
    o.shape = first.shape;
    o.dtype = first.dtype;
    o.data.resize(first.data.size());
    std::vector<const float*> src;
    for (const auto& c : ckpts) src.push_back(c.tensors.at(name).data.data());
    for (std::size_t i = 0; i < o.data.size(); ++i) {
      double sum = 0.0;
      for (const float* s : src) sum += s[i];
      store(o, i, sum / n, name);
    }
  });
  std::string fps;
  for (const auto& c : ckpts) fps += (fps.empty() ? "" : ",") + c.fingerprint();
  out.metadata = {{"role", "averaged"}, {"count", std::to_string(ckpts.size())}, {"input_fingerprints", fps}};
  return out;
}

}  // namespace

TensorCheckpoint merge(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                       const TensorCheckpoint& expert, const MergeRecipe& recipe) {
  return merge_impl(g_pt, g_it, expert, recipe, true);
}

TensorCheckpoint merge_serial(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                              const TensorCheckpoint& expert, const MergeRecipe& recipe) {
  return merge_impl(g_pt, g_it, expert, recipe, false);
}

TensorCheckpoint lambda_merge(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                              const TensorCheckpoint& expert, double lambda) {
  return merge(g_pt, g_it, expert, MergeRecipe::from_lambda(lambda));
}

TensorCheckpoint average_checkpoints(std::span<const TensorCheckpoint> ckpts) {
  return average_impl(ckpts, true);
}

TensorCheckpoint average_checkpoints_serial(std::span<const TensorCheckpoint> ckpts) {
  return average_impl(ckpts, false);
}

void SweepSpec::validate() const {
  if (lambdas.empty()) throw ContractViolation("sweep needs at least one lambda");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0 && lambdas[i] <= 1.0)) {
      throw ContractViolation("sweep lambda " + io::shortest(lambdas[i]) + " outside [0, 1]");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw ContractViolation("sweep lambdas must be strictly increasing");
    }
  }
  if (pattern.find("{lambda}") == std::string::npos) {
    throw ContractViolation("sweep pattern must contain {lambda}");
  }
}

std::string SweepSpec::file_name(double lambda) const {
  std::string out = pattern;
  const std::string value = io::fixed(lambda, 2);
  for (auto pos = out.find("{lambda}"); pos != std::string::npos; pos = out.find("{lambda}", pos)) {
    out.replace(pos, 8, value);
    pos += value.size();
  }
  return out;
}

namespace {

double parse_number(std::string_view s) {
  std::size_t used = 0;
  const std::string str(s);
  double v = 0.0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != str.size()) throw ContractViolation("not a number: '" + str + "'");
  return v;
}

}  // namespace

std::vector<double> parse_lambda_grid(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos) {
      throw ContractViolation("grid must be start:stop:step, got '" + std::string(text) + "'");
    }
    const double start = parse_number(text.substr(0, c1));
    const double stop = parse_number(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_number(text.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) {
      throw ContractViolation("grid needs step > 0 and stop >= start");
    }
    const double steps = (stop - start) / step;
    const double whole = std::round(steps);
    if (std::abs(steps - whole) > 1e-9) {
      throw ContractViolation("grid step does not divide the range evenly");
    }
    for (long long i = 0; i <= static_cast<long long>(whole); ++i) {
      // Snap to 12 decimals so 0.1 * 3 prints as 0.3.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    out.push_back(parse_number(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

std::string SweepManifest::json() const {
  io::Json rows = io::Json::array();
  for (const auto& e : entries) {
    rows.push_back({{"lambda", e.lambda}, {"file", e.file.filename().string()}, {"fingerprint", e.fingerprint}});
  }
  return io::Json{{"sweep", rows}}.dump(2) + "\n";
}

SweepManifest sweep(const TensorCheckpoint& g_pt, const TensorCheckpoint& g_it,
                    const TensorCheckpoint& expert, const SweepSpec& spec,
                    const std::filesystem::path& out_dir) {
  spec.validate();
  std::set<std::string> names;
  for (double l : spec.lambdas) {
    if (!names.insert(spec.file_name(l)).second) {
      throw ContractViolation("sweep pattern maps two lambdas to " + spec.file_name(l));
    }
  }
  SweepManifest manifest;
  try {
    std::filesystem::create_directories(out_dir);
    for (double l : spec.lambdas) {
      const TensorCheckpoint merged = lambda_merge(g_pt, g_it, expert, l);
      const auto file = out_dir / spec.file_name(l);
      tensor::save_checkpoint(merged, file);
      manifest.entries.push_back({l, file, merged.fingerprint()});
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& e : manifest.entries) std::filesystem::remove(e.file, ec);
    throw;
  }
  return manifest;
}

}  // namespace byol::merge
