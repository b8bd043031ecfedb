#pragma once

// Full judgment runs and the feature-group ablation built on top of them.
//
// Run directory layout:
//   manifest.json   what was run (method, mask, template/rubric versions,
//                   backend identity, decoding params, seed, corpus hash)
//   items.jsonl     ground truth and grouping keys for every judged item
//   records.jsonl   one JudgmentRecord per item, ordered by batch_id
//   failures.jsonl  one line per batch that could not be judged
//   summary.json    completion counts
//   responses/      hash-addressed raw responses plus the cache index

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "usejudge/backend.hpp"
#include "usejudge/error.hpp"
#include "usejudge/evaluation.hpp"
#include "usejudge/judge.hpp"

namespace usejudge {

struct ExperimentConfig {
  JudgeMethod method = JudgeMethod::kBaselineCot;
  std::optional<BatchScope> scope;  // defaults to default_scope(method)
  FeatureGroupMask mask = FeatureGroupMask::full();
  std::optional<RubricDocument> rubric;
  BackendConfig backend;  // decoding, retry and rate limits; identity comes from the backend
  bool strict = false;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> cache_dir;  // defaults to out_dir / "responses"
  const PromptTemplate* prompt_template = nullptr;   // defaults to the built-in template

  BatchScope effective_scope() const { return scope.value_or(default_scope(method)); }
};

struct FailureEntry {
  std::string batch_id;
  std::size_t batch_index = 0;
  std::string kind;  // "backend", "parse", "config"
  std::string message;
  std::optional<std::string> raw_response_ref;
};

struct RunSummary {
  std::size_t batches = 0;
  std::size_t judged = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;  // not attempted after a strict-mode failure
  std::size_t records = 0;
  std::size_t expected_records = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_attempts = 0;
  std::size_t retries = 0;

  bool complete() const { return failed == 0 && skipped == 0 && records == expected_records; }
  double parse_success_rate() const;
};

struct RunResult {
  RunSummary summary;
  std::vector<JudgmentRecord> records;
  std::vector<FailureEntry> failures;
  std::vector<ScoredItem> scored;  // records joined with ground truth
};

/// Raised in strict mode after the failure ledger has been written.
class StrictModeAbort : public Error {
 public:
  StrictModeAbort(const std::string& message, FailureEntry first)
      : Error(message), first_(std::move(first)) {}
  const FailureEntry& first_failure() const noexcept { return first_; }

 private:
  FailureEntry first_;
};

/// Builds batches, judges them concurrently (up to backend.rate.max_inflight
/// at once) and writes the run directory. Judging errors go to the failure
/// ledger; in strict mode the first one stops the run (StrictModeAbort).
RunResult run_experiment(const Corpus& corpus, const ExperimentConfig& config,
                         ChatBackend& backend);

/// Everything needed to evaluate a finished run directory.
struct LoadedRun {
  std::filesystem::path dir;
  nlohmann::json manifest;
  std::vector<JudgmentRecord> records;
  std::vector<ScoredItem> scored;
  std::size_t unjudged_items = 0;  // ground-truth items with no record
  std::size_t failures = 0;
};

LoadedRun load_run(const std::filesystem::path& dir);

struct AblationRow {
  FeatureGroupMask mask;
  CorrelationResult overall;
  RunSummary summary;
  std::optional<std::string> error;
};

/// Seven runs, one per non-empty subset of {R,S,U}, in the order of
/// ablation_masks(). Each run lands in `config.out_dir / <mask code>`;
/// config.mask is ignored.
std::vector<AblationRow> ablation_run(const Corpus& corpus, const ExperimentConfig& config,
                                      ChatBackend& backend);

}  // namespace usejudge
