#pragma once

// Judgment units: one clicked document on its own (POINT) or every clicked
// document of one user's task session (SESSION), with the feature groups
// that are allowed to reach the prompt.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "usejudge/metrics.hpp"
#include "usejudge/session.hpp"

namespace usejudge {

/// Optional feature groups. Query (Q) and document (D) features are always on.
struct FeatureGroupMask {
  bool relevance = true;          // R: task and query relevance labels
  bool satisfaction = true;       // S: query and session satisfaction
  bool user_behavior = true;      // U: CTR and dwell times

  static FeatureGroupMask full() { return {}; }
  static FeatureGroupMask none() { return {false, false, false}; }

  bool any() const { return relevance || satisfaction || user_behavior; }

  /// Canonical code in R, S, U order: "RSU", "RS", ..., or "QD" when empty.
  std::string code() const;

  bool operator==(const FeatureGroupMask&) const = default;
};

/// Accepts letters R, S, U in any order and case; "QD" or "none" for the empty mask.
std::optional<FeatureGroupMask> parse_mask(std::string_view text);

/// The seven non-empty subsets of {R,S,U} in reporting order:
/// RSU, RS, RU, SU, R, S, U.
std::array<FeatureGroupMask, 7> ablation_masks();

enum class BatchScope { kPoint, kSession };

std::string_view to_string(BatchScope scope);
std::optional<BatchScope> parse_scope(std::string_view text);

struct BatchItem {
  // Q
  std::string query_text;
  int query_position = 1;
  // D
  std::string doc_id;
  std::string url;
  std::string title;
  std::string summary;
  int rank = 1;
  // R
  std::optional<int> task_relevance;
  std::optional<int> query_relevance;
  // S
  std::optional<int> query_satisfaction;
  // U
  std::optional<double> url_ctr;
  std::optional<std::int64_t> url_dwell_ms;
  std::optional<std::int64_t> query_dwell_ms;

  bool operator==(const BatchItem&) const = default;
};

struct SessionContext {
  std::optional<std::string> task_description;
  std::optional<int> session_satisfaction;             // S
  std::optional<std::int64_t> task_dwell_ms;           // U
  std::optional<double> avg_query_dwell_ms;            // U

  bool operator==(const SessionContext&) const = default;
};

struct JudgmentBatch {
  std::string batch_id;
  BatchScope scope = BatchScope::kPoint;
  std::string user_id;
  std::string task_id;
  DatasetTag dataset_tag = DatasetTag::kSynthetic;
  std::vector<BatchItem> items;
  SessionContext session;
  FeatureGroupMask mask;
  std::vector<int> ground_truth;  // human usefulness, aligned with items

  bool operator==(const JudgmentBatch&) const = default;
};

/// Identity derived from (user, task, document-or-SESSION, mask).
std::string make_batch_id(std::string_view user_id, std::string_view task_id,
                          std::string_view unit, const FeatureGroupMask& mask);

/// Drops every field of a group the batch's mask excludes. Idempotent.
JudgmentBatch apply_mask(JudgmentBatch batch);

/// One POINT batch per clicked document, in corpus order.
std::vector<JudgmentBatch> make_baseline_batches(const Corpus& corpus,
                                                 const FeatureGroupMask& mask);

/// One SESSION batch per task session; items follow query order.
std::vector<JudgmentBatch> make_session_batches(const Corpus& corpus,
                                                const FeatureGroupMask& mask);

std::vector<JudgmentBatch> make_batches(const Corpus& corpus, BatchScope scope,
                                        const FeatureGroupMask& mask);

nlohmann::json batch_to_json(const JudgmentBatch& batch);
JudgmentBatch batch_from_json(const nlohmann::json& value);

}  // namespace usejudge
