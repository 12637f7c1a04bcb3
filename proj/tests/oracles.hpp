#pragma once

// Brute-force reference computations used by the tests. They share only the
// tokenizer and NFC with the library; n-gram counting, clipping, smoothing and
// the merge formula are written out directly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "byol/metrics.hpp"
#include "byol/tensor.hpp"
#include "byol/text.hpp"

namespace oracle {

template <typename Seq>
std::vector<Seq> ngrams(const Seq& s, std::size_t n) {
  std::vector<Seq> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  return out;
}

template <typename T>
std::size_t occurrences(const std::vector<T>& items, const T& x) {
  return static_cast<std::size_t>(std::count(items.begin(), items.end(), x));
}

// Clipped matches: for every distinct candidate n-gram, min(count in candidate,
// max count in any reference).
template <typename T>
std::size_t clipped(const std::vector<T>& hyp, const std::vector<std::vector<T>>& refs) {
  std::size_t m = 0;
  std::vector<T> seen;
  for (const auto& g : hyp) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    std::size_t best = 0;
    for (const auto& r : refs) best = std::max(best, occurrences(r, g));
    m += std::min(occurrences(hyp, g), best);
  }
  return m;
}

struct Stats {
  std::vector<double> m, t;
  double c = 0, r = 0;
};

inline Stats bleu_stats(const std::string& cand, const std::vector<std::string>& refs) {
  using Tok = std::vector<std::string>;
  const Tok h = byol::metrics::tokenize(cand, byol::metrics::Tokenizer::international);
  std::vector<Tok> rs;
  for (const auto& r : refs) rs.push_back(byol::metrics::tokenize(r, byol::metrics::Tokenizer::international));
  Stats s;
  s.c = static_cast<double>(h.size());
  double best = -1;
  for (const auto& r : rs) {
    const double len = static_cast<double>(r.size());
    if (best < 0 || std::abs(len - s.c) < std::abs(best - s.c) ||
        (std::abs(len - s.c) == std::abs(best - s.c) && len < best)) {
      best = len;
    }
  }
  s.r = best;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<std::vector<Tok>> rg;
    for (const auto& r : rs) rg.push_back(ngrams(r, n));
    const auto hg = ngrams(h, n);
    s.m.push_back(static_cast<double>(clipped(hg, rg)));
    s.t.push_back(static_cast<double>(hg.size()));
  }
  return s;
}

// exp_smoothing: matches of zero get 1/(2^k * total) for the k-th such order;
// orders without candidate n-grams are left out of the mean.
inline double bleu(const Stats& s, bool exp_smoothing) {
  if (s.c == 0) return 0.0;
  if (std::all_of(s.m.begin(), s.m.end(), [](double x) { return x == 0; })) return 0.0;
  double logs = 0;
  int used = 0;
  double k = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!exp_smoothing) {
      if (s.m[i] == 0) return 0.0;
      logs += std::log(s.m[i] / s.t[i]);
      ++used;
      continue;
    }
    if (s.t[i] == 0) continue;
    if (s.m[i] == 0) {
      k *= 2;
      logs += std::log(1.0 / (k * s.t[i]));
    } else {
      logs += std::log(s.m[i] / s.t[i]);
    }
    ++used;
  }
  const double bp = s.c < s.r ? std::exp(1 - s.r / s.c) : 1.0;
  return 100.0 * bp * std::exp(logs / used);
}

inline double sentence_bleu(const std::string& cand, const std::vector<std::string>& refs) {
  return bleu(bleu_stats(cand, refs), true);
}

inline double corpus_bleu(const std::vector<std::string>& cands, const std::vector<std::string>& refs) {
  Stats total;
  total.m.assign(4, 0);
  total.t.assign(4, 0);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto s = bleu_stats(cands[i], {refs[i]});
    for (int n = 0; n < 4; ++n) {
      total.m[n] += s.m[n];
      total.t[n] += s.t[n];
    }
    total.c += s.c;
    total.r += s.r;
  }
  return bleu(total, false);
}

inline double chrf_pp(const std::string& cand, const std::string& ref) {
  auto chars = [](const std::string& s) {
    std::u32string out;
    for (char32_t cp : byol::text::decode(byol::text::nfc(s))) {
      if (!byol::text::is_space(cp)) out.push_back(cp);
    }
    return out;
  };
  double ps = 0, rs = 0;
  int orders = 0;
  auto add = [&](const auto& hg, const auto& rg) {
    if (hg.empty() && rg.empty()) return;
    const double m = static_cast<double>(clipped(hg, std::vector<std::decay_t<decltype(rg)>>{rg}));
    ps += hg.empty() ? 0 : m / static_cast<double>(hg.size());
    rs += rg.empty() ? 0 : m / static_cast<double>(rg.size());
    ++orders;
  };
  const auto hc = chars(cand), rc = chars(ref);
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<std::u32string> hg, rg;
    for (std::size_t i = 0; i + n <= hc.size(); ++i) hg.push_back(hc.substr(i, n));
    for (std::size_t i = 0; i + n <= rc.size(); ++i) rg.push_back(rc.substr(i, n));
    add(hg, rg);
  }
  const auto hw = byol::text::tokenize_international(cand);
  const auto rw = byol::text::tokenize_international(ref);
  for (std::size_t n = 1; n <= 2; ++n) add(ngrams(hw, n), ngrams(rw, n));
  if (orders == 0) return 100.0;
  const double p = ps / orders, r = rs / orders;
  if (p + r == 0) return 0.0;
  return 100.0 * 5.0 * p * r / (4.0 * p + r);
}

// out = (1 - a - b) g_pt + a g_it + b expert, per element, in double.
inline double merge_scalar(double pt, double it, double ex, double a, double b) {
  return pt + a * (it - pt) + b * (ex - pt);
}

// Distance in units in the last place of a float.
inline std::int64_t ulp_distance(float x, float y) {
  auto key = [](float f) {
    std::int32_t i;
    std::memcpy(&i, &f, 4);
    return i < 0 ? static_cast<std::int64_t>(INT32_MIN) - i : static_cast<std::int64_t>(i);
  };
  return std::llabs(key(x) - key(y));
}

}  // namespace oracle
