#include "usejudge/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "usejudge/hash.hpp"

namespace usejudge {

using nlohmann::json;

namespace {

struct BatchOutcome {
  bool attempted = false;
  std::vector<JudgmentRecord> records;
  std::optional<FailureEntry> failure;
  bool cache_hit = false;
  int attempts = 0;
};

template <typename T>
void put_opt(json& out, const char* key, const std::optional<T>& value) {
  if (value) out[key] = *value;
}

template <typename T>
std::optional<T> get(const json& in, const char* key) {
  auto it = in.find(key);
  if (it == in.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename F>
void for_each_json_line(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what(), line_no);
    }
  }
}

json failure_to_json(const FailureEntry& f) {
  json out{{"batch_id", f.batch_id},
           {"batch_index", f.batch_index},
           {"kind", f.kind},
           {"message", f.message}};
  put_opt(out, "raw_response_ref", f.raw_response_ref);
  return out;
}

json item_truth_json(const JudgmentBatch& judged, const JudgmentBatch& full, std::size_t i) {
  const BatchItem& it = full.items[i];
  json out{{"batch_id", judged.batch_id},
           {"item_index", i},
           {"user_id", full.user_id},
           {"task_id", full.task_id},
           {"query_position", it.query_position},
           {"doc_id", it.doc_id},
           {"usefulness_human", full.ground_truth[i]}};
  put_opt(out, "task_relevance", it.task_relevance);
  put_opt(out, "query_relevance", it.query_relevance);
  return out;
}

ScoredItem scored_from_truth(const json& truth, int predicted) {
  ScoredItem s;
  s.user_id = truth.at("user_id").get<std::string>();
  s.task_id = truth.at("task_id").get<std::string>();
  s.query_position = truth.at("query_position").get<int>();
  s.doc_id = truth.at("doc_id").get<std::string>();
  s.human = truth.at("usefulness_human").get<int>();
  s.predicted = predicted;
  s.task_relevance = get<int>(truth, "task_relevance");
  s.query_relevance = get<int>(truth, "query_relevance");
  return s;
}

json decoding_json(const DecodingParams& d) {
  return {{"temperature", d.temperature}, {"top_p", d.top_p}, {"max_tokens", d.max_tokens}};
}

}  // namespace

double RunSummary::parse_success_rate() const {
  const std::size_t answered = judged + failed;
  return answered == 0 ? 0.0 : static_cast<double>(judged) / static_cast<double>(answered);
}

RunResult run_experiment(const Corpus& corpus, const ExperimentConfig& config,
                         ChatBackend& backend) {
  if (config.method == JudgeMethod::kTrueRubric && !config.rubric) {
    throw ConfigError("rubric required for method TRUE");
  }
  const BatchScope scope = config.effective_scope();
  if (config.method == JudgeMethod::kSessionPersonalized && scope != BatchScope::kSession) {
    throw ConfigError("method SESSION_PERSONALIZED requires session scope");
  }
  if (config.out_dir.empty()) throw ConfigError("run needs an output directory");
  const PromptTemplate& tmpl =
      config.prompt_template ? *config.prompt_template : PromptTemplate::builtin();

  std::filesystem::create_directories(config.out_dir);
  const auto cache_dir = config.cache_dir.value_or(config.out_dir / "responses");
  ResponseStore store(cache_dir);
  Dispatcher dispatcher(backend, config.backend.retry, config.backend.rate);
  Judge judge(dispatcher, store, config.backend.decoding, tmpl);

  const std::vector<JudgmentBatch> batches = make_batches(corpus, scope, config.mask);
  const std::vector<JudgmentBatch> unmasked = make_batches(corpus, scope, FeatureGroupMask::full());

  json manifest{
      {"format_version", "1"},
      {"corpus", {{"path", corpus.source_path},
                  {"sha256", sha256_hex(serialize_corpus(corpus))},
                  {"sessions", corpus.summary.sessions},
                  {"data_points", corpus.summary.data_points}}},
      {"method", to_string(config.method)},
      {"scope", to_string(scope)},
      {"mask", config.mask.code()},
      {"template_version", tmpl.version},
      {"backend", {{"identity", backend.identity()},
                   {"descriptor", describe_backend(config.backend)},
                   {"decoding", decoding_json(config.backend.decoding)},
                   {"max_attempts", config.backend.retry.max_attempts},
                   {"max_inflight", config.backend.rate.max_inflight},
                   {"requests_per_minute", config.backend.rate.requests_per_minute}}},
      {"strict", config.strict},
      {"seed", config.seed},
      {"cache_dir", cache_dir.string()},
      {"evaluation", {{"group_aggregation", "unweighted mean over groups with defined rho"}}},
  };
  if (config.rubric) {
    manifest["rubric"] = {{"version", config.rubric->version},
                          {"provenance", to_string(config.rubric->provenance)},
                          {"dataset", to_string(config.rubric->dataset_tag)}};
  }
  write_text(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
  {
    std::string items;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (std::size_t i = 0; i < batches[b].items.size(); ++i) {
        items += item_truth_json(batches[b], unmasked[b], i).dump();
        items += '\n';
      }
    }
    write_text(config.out_dir / "items.jsonl", items);
  }

  const RubricDocument* rubric = config.rubric ? &*config.rubric : nullptr;
  std::vector<BatchOutcome> outcomes(batches.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t index = next.fetch_add(1);
      if (index >= batches.size()) return;
      const JudgmentBatch& batch = batches[index];
      BatchOutcome& out = outcomes[index];
      out.attempted = true;
      try {
        JudgeOutcome judged = judge.judge_batch(batch, config.method, rubric);
        out.records = std::move(judged.records);
        out.cache_hit = judged.cache_hit;
        out.attempts = judged.attempts;
      } catch (const JudgeResponseError& e) {
        out.failure = FailureEntry{batch.batch_id, index, "parse", e.what(), e.ref()};
      } catch (const BackendError& e) {
        out.failure = FailureEntry{batch.batch_id, index, "backend", e.what(), std::nullopt};
        out.attempts = config.backend.retry.max_attempts;
      } catch (const Error& e) {
        out.failure = FailureEntry{batch.batch_id, index, "config", e.what(), std::nullopt};
      }
      if (out.failure) {
        spdlog::warn("batch {} failed: {}", batch.batch_id, out.failure->message);
        if (config.strict) stop.store(true);
      }
    }
  };
  const int inflight = std::max(1, config.backend.rate.max_inflight);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < inflight; ++i) pool.emplace_back(worker);
  }

  RunResult result;
  RunSummary& summary = result.summary;
  summary.batches = batches.size();
  for (std::size_t b = 0; b < batches.size(); ++b) {
    summary.expected_records += batches[b].items.size();
    const BatchOutcome& out = outcomes[b];
    if (!out.attempted) {
      ++summary.skipped;
      continue;
    }
    summary.backend_attempts += static_cast<std::size_t>(out.attempts);
    if (out.attempts > 1) summary.retries += static_cast<std::size_t>(out.attempts - 1);
    if (out.cache_hit) ++summary.cache_hits;
    if (out.failure) {
      ++summary.failed;
      result.failures.push_back(*out.failure);
      continue;
    }
    ++summary.judged;
    for (const JudgmentRecord& r : out.records) {
      result.scored.push_back(scored_from_truth(item_truth_json(batches[b], unmasked[b], r.item_index),
                                                r.predicted_label));
      result.records.push_back(r);
    }
  }
  summary.records = result.records.size();
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const JudgmentRecord& a, const JudgmentRecord& b) {
                     return std::tie(a.batch_id, a.item_index) < std::tie(b.batch_id, b.item_index);
                   });

  std::string records_text;
  for (const JudgmentRecord& r : result.records) records_text += record_to_json(r).dump() + "\n";
  write_text(config.out_dir / "records.jsonl", records_text);
  std::string failures_text;
  for (const FailureEntry& f : result.failures) failures_text += failure_to_json(f).dump() + "\n";
  write_text(config.out_dir / "failures.jsonl", failures_text);

  json summary_json{{"batches", summary.batches},
                    {"judged", summary.judged},
                    {"failed", summary.failed},
                    {"skipped", summary.skipped},
                    {"records", summary.records},
                    {"expected_records", summary.expected_records},
                    {"cache_hits", summary.cache_hits},
                    {"backend_attempts", summary.backend_attempts},
                    {"retries", summary.retries},
                    {"parse_success_rate", summary.parse_success_rate()},
                    {"complete", summary.complete()}};
  write_text(config.out_dir / "summary.json", summary_json.dump(2) + "\n");
  spdlog::info("run {}: {}/{} batches judged, {} failed, {} cache hits, {} retries",
               config.out_dir.string(), summary.judged, summary.batches, summary.failed,
               summary.cache_hits, summary.retries);

  if (config.strict && !result.failures.empty()) {
    const FailureEntry& first = result.failures.front();
    throw StrictModeAbort("strict mode: batch " + first.batch_id + " (index " +
                              std::to_string(first.batch_index) + ") failed: " + first.message +
                              "; see " + (config.out_dir / "failures.jsonl").string(),
                          first);
  }
  return result;
}

LoadedRun load_run(const std::filesystem::path& dir) {
  LoadedRun run;
  run.dir = dir;
  try {
    run.manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw InputError((dir / "manifest.json").string() + ": " + e.what());
  }
  std::map<std::pair<std::string, std::size_t>, int> predictions;
  for_each_json_line(dir / "records.jsonl", [&](const json& value) {
    JudgmentRecord r = record_from_json(value);
    predictions[{r.batch_id, r.item_index}] = r.predicted_label;
    run.records.push_back(std::move(r));
  });
  for_each_json_line(dir / "items.jsonl", [&](const json& truth) {
    auto it = predictions.find(
        {truth.at("batch_id").get<std::string>(), truth.at("item_index").get<std::size_t>()});
    if (it == predictions.end()) {
      ++run.unjudged_items;
      return;
    }
    run.scored.push_back(scored_from_truth(truth, it->second));
  });
  if (std::filesystem::exists(dir / "failures.jsonl")) {
    for_each_json_line(dir / "failures.jsonl", [&](const json&) { ++run.failures; });
  }
  return run;
}

std::vector<AblationRow> ablation_run(const Corpus& corpus, const ExperimentConfig& config,
                                      ChatBackend& backend) {
  std::vector<AblationRow> rows;
  for (const FeatureGroupMask& mask : ablation_masks()) {
    AblationRow row;
    row.mask = mask;
    ExperimentConfig run_config = config;
    run_config.mask = mask;
    run_config.out_dir = config.out_dir / mask.code();
    try {
      RunResult result = run_experiment(corpus, run_config, backend);
      row.summary = result.summary;
      row.overall = grouped_correlation(result.scored, Grouping::kOverall);
      if (!result.failures.empty()) {
        row.error = std::to_string(result.failures.size()) + " batch(es) failed; see " +
                    (run_config.out_dir / "failures.jsonl").string();
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace usejudge
