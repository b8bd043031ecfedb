#pragma once

// Agreement between predicted and human usefulness labels.

#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "usejudge/batching.hpp"

namespace usejudge {

/// Spearman rho, or nullopt ("undefined") when n < 2 or either side is constant.
struct Correlation {
  std::optional<double> rho;
  std::size_t n = 0;

  bool defined() const { return rho.has_value(); }
};

/// Pearson correlation of midranks. Throws std::invalid_argument when the
/// inputs differ in length.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

/// One judged item joined with its ground truth.
struct ScoredItem {
  std::string user_id;
  std::string task_id;
  int query_position = 1;
  std::string doc_id;
  int human = 0;
  int predicted = 0;
  std::optional<int> task_relevance;
  std::optional<int> query_relevance;
};

enum class Grouping { kOverall, kPerTask, kPerQuery };

std::string_view to_string(Grouping grouping);

struct CorrelationResult {
  Grouping grouping = Grouping::kOverall;
  std::optional<double> rho;
  std::size_t n = 0;               // items considered
  std::size_t groups_used = 0;     // groups with a defined rho
  std::size_t groups_skipped = 0;  // groups with n < 2 or zero variance

  bool defined() const { return rho.has_value(); }
};

/// OVERALL pools every item. PER_TASK groups by task_id and PER_QUERY by
/// (user, task, query position); both report the unweighted mean of the
/// defined per-group values.
CorrelationResult grouped_correlation(std::span<const ScoredItem> items, Grouping grouping);

enum class RelevanceSource { kQueryRelevance, kTaskRelevance };

std::string_view to_string(RelevanceSource source);

enum class Quadrant { kHighRelHighUse, kHighRelLowUse, kLowRelHighUse, kLowRelLowUse };

inline constexpr std::array<Quadrant, 4> kQuadrants = {
    Quadrant::kHighRelHighUse, Quadrant::kHighRelLowUse, Quadrant::kLowRelHighUse,
    Quadrant::kLowRelLowUse};

std::string_view to_string(Quadrant quadrant);  // "HR_HU", ...

/// Labels 2 and 3 count as high, 0 and 1 as low.
inline bool is_high(int label) { return label >= 2; }

/// Quadrant of an item by (relevance, human usefulness); nullopt when the
/// item lacks the chosen relevance label.
std::optional<Quadrant> quadrant_of(const ScoredItem& item, RelevanceSource source);

struct QuadrantPartition {
  std::array<std::vector<std::size_t>, 4> members;  // item indices, by Quadrant
  std::size_t unlabeled = 0;

  std::size_t labeled() const;
};

QuadrantPartition partition_quadrants(std::span<const ScoredItem> items, RelevanceSource source);

struct QuadrantReport {
  RelevanceSource source = RelevanceSource::kQueryRelevance;
  QuadrantPartition partition;
  std::array<Correlation, 4> cells;  // predicted vs human within each quadrant
};

QuadrantReport quadrant_analysis(std::span<const ScoredItem> items, RelevanceSource source);

/// Exact non-negative rational; keeps binary metric identities exact.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction of(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Fraction complement() const { return of(den - num, den); }  // 1 - x
  bool operator==(const Fraction&) const = default;
};

enum class F1Average { kMacro, kPositive };

std::string_view to_string(F1Average average);

struct BinaryScores {
  // Confusion matrix over retained items; positive = useful.
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  std::size_t excluded = 0;  // items where either label is 1
  F1Average average = F1Average::kMacro;

  std::size_t retained() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
  Fraction mse() const;
  Fraction mae() const;
  Fraction accuracy() const;
  double f1() const;
};

/// Label 0 is negative, 2 and 3 positive; items where the human or the
/// predicted label is 1 are left out. Throws Error when nothing remains.
BinaryScores binarize_and_score(std::span<const ScoredItem> items,
                                F1Average average = F1Average::kMacro);

struct LabelDistribution {
  std::array<std::size_t, 4> human{};
  std::array<std::size_t, 4> predicted{};
};

LabelDistribution label_distribution(std::span<const ScoredItem> items);

}  // namespace usejudge
