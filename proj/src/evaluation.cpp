#include "usejudge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "usejudge/error.hpp"

namespace usejudge {

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
  Correlation out;
  out.n = x.size();
  if (out.n < 2) return out;

  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = (static_cast<double>(out.n) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < out.n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return out;
  out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return out;
}

std::string_view to_string(Grouping grouping) {
  switch (grouping) {
    case Grouping::kOverall:
      return "OVERALL";
    case Grouping::kPerTask:
      return "PER_TASK";
    case Grouping::kPerQuery:
      return "PER_QUERY";
  }
  return "UNKNOWN";
}

namespace {

Correlation correlate(std::span<const ScoredItem> items, std::span<const std::size_t> members) {
  std::vector<double> predicted, human;
  predicted.reserve(members.size());
  human.reserve(members.size());
  for (std::size_t index : members) {
    predicted.push_back(items[index].predicted);
    human.push_back(items[index].human);
  }
  return spearman(predicted, human);
}

}  // namespace

CorrelationResult grouped_correlation(std::span<const ScoredItem> items, Grouping grouping) {
  CorrelationResult result;
  result.grouping = grouping;
  result.n = items.size();

  if (grouping == Grouping::kOverall) {
    std::vector<std::size_t> all(items.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Correlation c = correlate(items, all);
    result.rho = c.rho;
    result.groups_used = c.defined() ? 1 : 0;
    result.groups_skipped = c.defined() ? 0 : 1;
    return result;
  }

  std::map<std::tuple<std::string, std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ScoredItem& it = items[i];
    if (grouping == Grouping::kPerTask) {
      groups[{"", it.task_id, 0}].push_back(i);
    } else {
      groups[{it.user_id, it.task_id, it.query_position}].push_back(i);
    }
  }
  double sum = 0.0;
  for (const auto& [key, members] : groups) {
    const Correlation c = correlate(items, members);
    if (c.defined()) {
      sum += *c.rho;
      ++result.groups_used;
    } else {
      ++result.groups_skipped;
    }
  }
  if (result.groups_used > 0) result.rho = sum / static_cast<double>(result.groups_used);
  return result;
}

std::string_view to_string(RelevanceSource source) {
  return source == RelevanceSource::kQueryRelevance ? "QUERY_REL" : "TASK_REL";
}

std::string_view to_string(Quadrant quadrant) {
  switch (quadrant) {
    case Quadrant::kHighRelHighUse:
      return "HR_HU";
    case Quadrant::kHighRelLowUse:
      return "HR_LU";
    case Quadrant::kLowRelHighUse:
      return "LR_HU";
    case Quadrant::kLowRelLowUse:
      return "LR_LU";
  }
  return "UNKNOWN";
}

std::optional<Quadrant> quadrant_of(const ScoredItem& item, RelevanceSource source) {
  const std::optional<int>& relevance =
      source == RelevanceSource::kQueryRelevance ? item.query_relevance : item.task_relevance;
  if (!relevance) return std::nullopt;
  const bool high_rel = is_high(*relevance);
  const bool high_use = is_high(item.human);
  if (high_rel) return high_use ? Quadrant::kHighRelHighUse : Quadrant::kHighRelLowUse;
  return high_use ? Quadrant::kLowRelHighUse : Quadrant::kLowRelLowUse;
}

std::size_t QuadrantPartition::labeled() const {
  std::size_t n = 0;
  for (const auto& m : members) n += m.size();
  return n;
}

QuadrantPartition partition_quadrants(std::span<const ScoredItem> items, RelevanceSource source) {
  QuadrantPartition p;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (auto q = quadrant_of(items[i], source)) {
      p.members[static_cast<std::size_t>(*q)].push_back(i);
    } else {
      ++p.unlabeled;
    }
  }
  return p;
}

QuadrantReport quadrant_analysis(std::span<const ScoredItem> items, RelevanceSource source) {
  QuadrantReport report;
  report.source = source;
  report.partition = partition_quadrants(items, source);
  for (std::size_t q = 0; q < 4; ++q) {
    report.cells[q] = correlate(items, report.partition.members[q]);
  }
  return report;
}

Fraction Fraction::of(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw Error("fraction with non-positive denominator");
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
}

std::string_view to_string(F1Average average) {
  return average == F1Average::kMacro ? "macro" : "positive";
}

Fraction BinaryScores::mse() const {
  // Squared and absolute errors coincide on {0,1} labels.
  return Fraction::of(static_cast<std::int64_t>(false_positive + false_negative),
                      static_cast<std::int64_t>(retained()));
}

Fraction BinaryScores::mae() const {
  return Fraction::of(static_cast<std::int64_t>(false_positive + false_negative),
                      static_cast<std::int64_t>(retained()));
}

Fraction BinaryScores::accuracy() const {
  return Fraction::of(static_cast<std::int64_t>(true_positive + true_negative),
                      static_cast<std::int64_t>(retained()));
}

double BinaryScores::f1() const {
  // A class that is neither present nor predicted scores 1.
  auto class_f1 = [](std::size_t hits, std::size_t misses) {
    const std::size_t denominator = 2 * hits + misses;
    return denominator == 0 ? 1.0 : 2.0 * static_cast<double>(hits) / static_cast<double>(denominator);
  };
  const std::size_t errors = false_positive + false_negative;
  const double positive = class_f1(true_positive, errors);
  if (average == F1Average::kPositive) return positive;
  const double negative = class_f1(true_negative, errors);
  return (positive + negative) / 2.0;
}

BinaryScores binarize_and_score(std::span<const ScoredItem> items, F1Average average) {
  BinaryScores s;
  s.average = average;
  for (const ScoredItem& it : items) {
    if (it.human == 1 || it.predicted == 1) {
      ++s.excluded;
      continue;
    }
    const bool truth = is_high(it.human);
    const bool guess = is_high(it.predicted);
    if (truth && guess) ++s.true_positive;
    if (!truth && guess) ++s.false_positive;
    if (!truth && !guess) ++s.true_negative;
    if (truth && !guess) ++s.false_negative;
  }
  if (s.retained() == 0) throw Error("binary scoring: no items left after excluding label 1");
  return s;
}

LabelDistribution label_distribution(std::span<const ScoredItem> items) {
  LabelDistribution d;
  for (const ScoredItem& it : items) {
    if (it.human >= 0 && it.human <= 3) ++d.human[it.human];
    if (it.predicted >= 0 && it.predicted <= 3) ++d.predicted[it.predicted];
  }
  return d;
}

}  // namespace usejudge
