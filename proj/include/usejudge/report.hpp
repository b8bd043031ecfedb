#pragma once

// Evaluation reports: a readable report.txt, one TSV per table, a flat
// key=value file for regression checks and an SVG histogram.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "usejudge/evaluation.hpp"
#include "usejudge/experiment.hpp"

namespace usejudge {

struct EvalOptions {
  RelevanceSource relevance_source = RelevanceSource::kQueryRelevance;
  bool binarize = false;
  F1Average f1_average = F1Average::kMacro;
};

struct EvalReport {
  EvalOptions options;
  std::size_t items = 0;
  std::array<CorrelationResult, 3> correlations;  // OVERALL, PER_TASK, PER_QUERY
  LabelDistribution distribution;
  QuadrantReport quadrants;
  std::optional<BinaryScores> binary;
  std::optional<std::string> binary_error;  // set when binarization retained nothing
};

EvalReport evaluate(std::span<const ScoredItem> items, const EvalOptions& options = {});

/// "0.123456" style value, or "undefined".
std::string format_rho(const std::optional<double>& rho);

/// Flat `key=value` lines, sorted by key.
std::string metrics_kv(const EvalReport& report);

/// Writes report.txt, correlations.tsv, distribution.tsv, quadrants.tsv,
/// binary.tsv (when scored) and metrics.kv into `dir`. `manifest` is the
/// run manifest; its method, mask and backend head the text report.
void write_report(const EvalReport& report, const nlohmann::json& manifest,
                  const std::filesystem::path& dir);

/// Grouped bar chart of human vs predicted label counts.
std::string distribution_svg(const LabelDistribution& distribution, const std::string& title);

/// Published full-feature-to-single-group values, shown beside ablation results.
struct AblationReference {
  const char* mask;
  double gpt_4o_mini;
  double llama_3_3_70b;
};
const std::array<AblationReference, 7>& ablation_reference();

/// ablation.tsv, ablation.txt and metrics.kv for an ablation directory.
void write_ablation(std::span<const AblationRow> rows, const std::filesystem::path& dir);

}  // namespace usejudge
