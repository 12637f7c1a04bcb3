#include "byol/rtt.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "byol/digest.hpp"
#include "byol/io.hpp"
#include "byol/text.hpp"

namespace byol::rtt {

using io::Json;

std::size_t DomainBenchmark::sentence_count() const {
  std::size_t n = 0;
  for (const auto& [_, s] : domains) n += s.size();
  return n;
}

std::string DomainBenchmark::fingerprint() const {
  Sha256 h;
  h.field(pivot_language);
  for (const auto& [domain, sentences] : domains) {
    for (const auto& s : sentences) h.field(domain).field(s.id).field(s.text);
  }
  return h.hex();
}

void DomainBenchmark::validate() const {
  if (domains.empty()) throw ContractViolation("benchmark has no domains");
  for (const auto& [domain, sentences] : domains) {
    if (sentences.empty()) throw ContractViolation("domain '" + domain + "' is empty");
    std::set<std::string> ids;
    for (const auto& s : sentences) {
      if (!ids.insert(s.id).second) {
        throw ContractViolation("duplicate id '" + s.id + "' in domain '" + domain + "'");
      }
    }
  }
}

DomainBenchmark parse_benchmark(std::string_view content, const std::string& source,
                                std::string pivot) {
  DomainBenchmark b;
  b.pivot_language = std::move(pivot);
  std::map<std::string, std::set<std::string>> seen;
  io::for_each_jsonl(content, source, [&](const Json& j, std::size_t line) {
    std::string domain, id, txt;
    try {
      domain = j.at("domain").get<std::string>();
      const auto& jid = j.at("id");
      id = jid.is_string() ? jid.get<std::string>() : jid.dump();
      txt = j.at("text").get<std::string>();
    } catch (const Json::exception& e) {
      throw ParseError(source, line, 0, std::string("benchmark record: ") + e.what());
    }
    if (!seen[domain].insert(id).second) {
      throw ParseError(source, line, 0, "duplicate id '" + id + "' in domain '" + domain + "'");
    }
    b.domains[domain].push_back({std::move(id), text::nfc(txt)});
  });
  b.validate();
  return b;
}

DomainBenchmark load_benchmark(const std::filesystem::path& path, std::string pivot) {
  return parse_benchmark(io::read_file(path), path.string(), std::move(pivot));
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::bleu: return "bleu";
    case Metric::chrf_pp: return "chrf_pp";
    case Metric::cosine: return "cosine";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "bleu") return Metric::bleu;
  if (s == "chrf_pp" || s == "chrf++" || s == "chrf") return Metric::chrf_pp;
  if (s == "cosine") return Metric::cosine;
  throw ContractViolation("unknown metric '" + std::string(s) + "'");
}

namespace {

using backends::BackendError;
using backends::TranslationBackend;

std::vector<std::string> call_with_retry(TranslationBackend& backend,
                                         std::span<const std::string> texts,
                                         const std::string& src, const std::string& tgt,
                                         const RetryPolicy& retry) {
  auto delay = retry.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      auto out = backend.translate(texts, src, tgt);
      if (out.size() != texts.size()) {
        throw BackendError(backends::FailureKind::length_mismatch,
                           backend.name() + ": output batch length differs");
      }
      return out;
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= retry.attempts) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

struct Slot {
  std::string forward;
  std::string back;
  bool failed = false;
  std::string error;
};

// Round-trips one batch; when the whole batch fails, sentences are retried one
// at a time so a single bad input cannot sink its neighbours.
void round_trip_batch(std::span<const std::string> sources, std::span<Slot> slots,
                      TranslationBackend& forward, TranslationBackend& backward,
                      const std::string& pivot, const std::string& target,
                      const RetryPolicy& retry) {
  try {
    auto fwd = call_with_retry(forward, sources, pivot, target, retry);
    auto back = call_with_retry(backward, fwd, target, pivot, retry);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      slots[i].forward = std::move(fwd[i]);
      slots[i].back = std::move(back[i]);
    }
    return;
  } catch (const BackendError&) {
    // retried per sentence below
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    try {
      auto fwd = call_with_retry(forward, sources.subspan(i, 1), pivot, target, retry);
      auto back = call_with_retry(backward, fwd, target, pivot, retry);
      slots[i].forward = std::move(fwd[0]);
      slots[i].back = std::move(back[0]);
    } catch (const BackendError& e) {
      slots[i].failed = true;
      slots[i].error = e.what();
    }
  }
}

std::string config_fingerprint(const DomainBenchmark& b, const TranslationBackend& fwd,
                               const TranslationBackend& back, const RttOptions& o,
                               const std::set<Metric>& metrics) {
  Sha256 h;
  h.field(b.fingerprint()).field(fwd.name()).field(back.name()).field(o.target_language);
  for (Metric m : metrics) h.field(to_string(m));
  h.field(std::to_string(o.batch_size)).field(o.corpus_level_bleu ? "corpus" : "sentence");
  h.field(io::shortest(o.invalid_failure_share));
  return h.hex();
}

}  // namespace

RttReport run_round_trip(const DomainBenchmark& benchmark, TranslationBackend& forward,
                         TranslationBackend& backward, const RttOptions& options) {
  benchmark.validate();
  if (options.metrics.empty()) throw ContractViolation("run_round_trip: no metrics selected");
  if (options.concurrency_limit < 1) throw ContractViolation("concurrency_limit must be positive");
  if (options.batch_size < 1) throw ContractViolation("batch_size must be positive");
  if (options.retry.attempts < 1) throw ContractViolation("retry attempts must be positive");
  if (options.target_language.size() != 3) {
    throw ContractViolation("run_round_trip: target language must be an ISO 639-3 code");
  }
  for (const auto* b : {&forward, &backward}) {
    if (!b->deterministic()) {
      throw ContractViolation("backend '" + b->name() +
                              "' is non-deterministic; wrap it in a translation cache");
    }
  }

  RttReport report;
  report.forward_backend = forward.name();
  report.backward_backend = backward.name();
  report.backend = forward.name() == backward.name() ? forward.name()
                                                     : forward.name() + ">" + backward.name();
  report.benchmark_fingerprint = benchmark.fingerprint();
  report.metrics = options.metrics;
  if (report.metrics.contains(Metric::cosine) && !backward.can_embed()) {
    report.metrics.erase(Metric::cosine);
    report.notes.push_back("cosine omitted: backend '" + backward.name() + "' cannot embed");
  }
  report.config_fingerprint =
      config_fingerprint(benchmark, forward, backward, options, report.metrics);

  // Flatten in domain order; batches never span domains and do not depend on
  // the concurrency limit.
  std::vector<std::string> sources;
  std::vector<std::pair<std::size_t, std::size_t>> batches;  // [begin, end)
  for (const auto& [domain, sentences] : benchmark.domains) {
    const std::size_t begin = sources.size();
    for (const auto& s : sentences) sources.push_back(s.text);
    for (std::size_t b = begin; b < sources.size(); b += options.batch_size) {
      batches.emplace_back(b, std::min(sources.size(), b + static_cast<std::size_t>(options.batch_size)));
    }
  }

  std::vector<Slot> slots(sources.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < batches.size(); k = next++) {
      const auto [b, e] = batches[k];
      round_trip_batch(std::span(sources).subspan(b, e - b), std::span(slots).subspan(b, e - b),
                       forward, backward, benchmark.pivot_language, options.target_language,
                       options.retry);
    }
  };
  {
    const auto n = std::min<std::size_t>(options.concurrency_limit, batches.size());
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }

  const metrics::BleuConfig bleu_sentence = metrics::BleuConfig::sentence_default();
  const metrics::BleuConfig bleu_corpus = metrics::BleuConfig::corpus_default();
  std::size_t flat = 0;
  for (const auto& [domain, sentences] : benchmark.domains) {
    DomainResult dr;
    dr.sentences = sentences.size();
    std::map<Metric, double> sums;
    std::vector<metrics::CandidateRefs> corpus;
    for (const auto& s : sentences) {
      const Slot& slot = slots[flat++];
      report.transcript.push_back({domain, s.id, s.text, slot.forward, slot.back, slot.failed, slot.error});
      if (slot.failed) {
        ++dr.failed;
        continue;
      }
      ++dr.scored;
      const std::vector<std::string> ref{s.text};
      for (Metric m : report.metrics) {
        switch (m) {
          case Metric::bleu:
            if (options.corpus_level_bleu) {
              corpus.push_back({slot.back, ref});
            } else {
              sums[m] += metrics::sentence_bleu(slot.back, ref, bleu_sentence).value;
            }
            break;
          case Metric::chrf_pp:
            sums[m] += metrics::chrf_pp(slot.back, ref).value;
            break;
          case Metric::cosine: {
            const auto a = backward.embed(s.text);
            const auto b = backward.embed(slot.back);
            sums[m] += metrics::cosine_similarity(a, b).value;
            break;
          }
        }
      }
    }
    report.failed_sentences += dr.failed;
    if (dr.scored > 0) {
      for (Metric m : report.metrics) {
        if (m == Metric::bleu && options.corpus_level_bleu) {
          dr.scores[m] = metrics::corpus_bleu(corpus, bleu_corpus).value;
        } else {
          dr.scores[m] = sums[m] / static_cast<double>(dr.scored);
        }
      }
    }
    dr.valid = dr.scored > 0 &&
               static_cast<double>(dr.failed) <= options.invalid_failure_share * static_cast<double>(dr.sentences);
    report.domains[domain] = std::move(dr);
  }

  std::size_t summarized = 0;
  for (const auto& [domain, dr] : report.domains) {
    if (!dr.valid) {
      report.notes.push_back("domain '" + domain + "' invalid: " + std::to_string(dr.failed) +
                             " of " + std::to_string(dr.sentences) + " sentences failed");
      continue;
    }
    ++summarized;
    for (const auto& [m, v] : dr.scores) report.macro[m] += v;
  }
  for (auto& [m, v] : report.macro) v /= static_cast<double>(summarized);
  return report;
}

std::string RttReport::scores_json() const {
  Json j;
  j["backend"] = backend;
  j["forward_backend"] = forward_backend;
  j["backward_backend"] = backward_backend;
  j["benchmark_fingerprint"] = benchmark_fingerprint;
  j["config_fingerprint"] = config_fingerprint;
  j["metrics"] = Json::array();
  for (Metric m : metrics) j["metrics"].push_back(to_string(m));
  j["notes"] = notes;
  j["failed_sentences"] = failed_sentences;
  j["macro"] = Json::object();
  for (const auto& [m, v] : macro) j["macro"][std::string(to_string(m))] = v;
  j["domains"] = Json::object();
  for (const auto& [d, r] : domains) {
    Json dj = {{"sentences", r.sentences}, {"scored", r.scored}, {"failed", r.failed},
               {"valid", r.valid}, {"scores", Json::object()}};
    for (const auto& [m, v] : r.scores) dj["scores"][std::string(to_string(m))] = v;
    j["domains"][d] = std::move(dj);
  }
  return j.dump(2) + "\n";
}

RttReport parse_report(std::string_view content) {
  RttReport r;
  try {
    const Json j = Json::parse(content);
    r.backend = j.at("backend").get<std::string>();
    r.forward_backend = j.value("forward_backend", r.backend);
    r.backward_backend = j.value("backward_backend", r.backend);
    r.benchmark_fingerprint = j.at("benchmark_fingerprint").get<std::string>();
    r.config_fingerprint = j.value("config_fingerprint", "");
    for (const auto& m : j.at("metrics")) r.metrics.insert(parse_metric(m.get<std::string>()));
    r.notes = j.value("notes", std::vector<std::string>{});
    r.failed_sentences = j.value("failed_sentences", std::size_t{0});
    for (const auto& [m, v] : j.at("macro").items()) r.macro[parse_metric(m)] = v.get<double>();
    for (const auto& [d, dj] : j.at("domains").items()) {
      DomainResult dr;
      dr.sentences = dj.at("sentences").get<std::size_t>();
      dr.scored = dj.at("scored").get<std::size_t>();
      dr.failed = dj.at("failed").get<std::size_t>();
      dr.valid = dj.at("valid").get<bool>();
      for (const auto& [m, v] : dj.at("scores").items()) dr.scores[parse_metric(m)] = v.get<double>();
      r.domains[d] = std::move(dr);
    }
  } catch (const Json::exception& e) {
    throw ContractViolation(std::string("malformed RTT report: ") + e.what());
  }
  return r;
}

std::string RttReport::table() const {
  std::vector<std::string> header{"domain", "N_d", "failed", "valid"};
  for (Metric m : metrics) header.emplace_back(to_string(m));
  std::vector<std::vector<std::string>> rows;
  for (const auto& [d, r] : domains) {
    std::vector<std::string> row{d, std::to_string(r.scored), std::to_string(r.failed),
                                 r.valid ? "yes" : "no"};
    for (Metric m : metrics) {
      auto it = r.scores.find(m);
      row.push_back(it == r.scores.end() ? "-"
                                         : (m == Metric::cosine ? io::fixed(it->second, 4)
                                                                : io::fixed(it->second)));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> macro_row{"MACRO", "", std::to_string(failed_sentences), ""};
  for (Metric m : metrics) {
    auto it = macro.find(m);
    macro_row.push_back(it == macro.end() ? "-"
                                          : (m == Metric::cosine ? io::fixed(it->second, 4)
                                                                 : io::fixed(it->second)));
  }
  rows.push_back(std::move(macro_row));
  std::string out = "round trip: " + backend + "\n" + io::render_table(header, rows);
  for (const auto& n : notes) out += "note: " + n + "\n";
  out += "note: BLEU uses the international tokenizer with exponential smoothing; "
         "scores are not directly comparable with other toolkits' settings\n";
  return out;
}

std::string RttReport::transcript_jsonl() const {
  std::vector<Json> rows;
  rows.reserve(transcript.size());
  for (const auto& t : transcript) {
    Json row = {{"domain", t.domain}, {"id", t.id}, {"source", t.source},
                {"forward", t.forward}, {"back", t.back}, {"failed", t.failed}};
    if (t.failed) row["error"] = t.error;
    rows.push_back(std::move(row));
  }
  return io::to_jsonl(rows);
}

Ranking rank_backends(std::span<const RttReport> reports) {
  if (reports.empty()) throw ContractViolation("rank_backends: no reports");
  Ranking r;
  r.benchmark_fingerprint = reports.front().benchmark_fingerprint;
  for (const auto& rep : reports) {
    if (rep.benchmark_fingerprint != r.benchmark_fingerprint) {
      throw ContractViolation("rank_backends: reports use different benchmarks ('" +
                              reports.front().backend + "' vs '" + rep.backend + "')");
    }
  }
  std::set<Metric> all;
  for (const auto& rep : reports) all.insert(rep.metrics.begin(), rep.metrics.end());
  for (Metric m : all) {
    auto& board = r.leaderboard[m];
    for (const auto& rep : reports) {
      if (auto it = rep.macro.find(m); it != rep.macro.end()) board.push_back({rep.backend, it->second});
    }
    std::stable_sort(board.begin(), board.end(), [](const auto& a, const auto& b) {
      return a.macro != b.macro ? a.macro > b.macro : a.backend < b.backend;
    });
    auto& wins = r.domain_wins[m];
    for (const auto& rep : reports) wins[rep.backend] += 0;
    std::set<std::string> domains;
    for (const auto& rep : reports) {
      for (const auto& [d, _] : rep.domains) domains.insert(d);
    }
    for (const auto& d : domains) {
      std::optional<double> best;
      std::vector<std::string> leaders;
      for (const auto& rep : reports) {
        auto dit = rep.domains.find(d);
        if (dit == rep.domains.end() || !dit->second.valid) continue;
        auto sit = dit->second.scores.find(m);
        if (sit == dit->second.scores.end()) continue;
        if (!best || sit->second > *best) {
          best = sit->second;
          leaders = {rep.backend};
        } else if (sit->second == *best) {
          leaders.push_back(rep.backend);
        }
      }
      if (leaders.size() == 1) {
        r.domain_winner[m][d] = leaders.front();
        ++wins[leaders.front()];
      } else {
        r.domain_winner[m][d] = "";
      }
    }
  }
  return r;
}

std::string Ranking::json() const {
  Json j;
  j["benchmark_fingerprint"] = benchmark_fingerprint;
  j["leaderboard"] = Json::object();
  for (const auto& [m, board] : leaderboard) {
    Json arr = Json::array();
    for (const auto& e : board) arr.push_back({{"backend", e.backend}, {"macro", e.macro}});
    j["leaderboard"][std::string(to_string(m))] = arr;
  }
  j["domain_winner"] = Json::object();
  for (const auto& [m, w] : domain_winner) j["domain_winner"][std::string(to_string(m))] = w;
  j["domain_wins"] = Json::object();
  for (const auto& [m, w] : domain_wins) j["domain_wins"][std::string(to_string(m))] = w;
  return j.dump(2) + "\n";
}

std::string Ranking::table() const {
  std::string out;
  for (const auto& [m, board] : leaderboard) {
    std::vector<std::vector<std::string>> rows;
    const auto& wins = domain_wins.at(m);
    const std::size_t domains = domain_winner.count(m) ? domain_winner.at(m).size() : 0;
    for (std::size_t i = 0; i < board.size(); ++i) {
      auto it = wins.find(board[i].backend);
      rows.push_back({std::to_string(i + 1), board[i].backend, io::fixed(board[i].macro),
                      std::to_string(it == wins.end() ? 0 : it->second) + "/" + std::to_string(domains)});
    }
    out += std::string(to_string(m)) + "\n" +
           io::render_table({"rank", "backend", "macro", "domain wins"}, rows) + "\n";
  }
  return out;
}

}  // namespace byol::rtt
