#pragma once

// Seeded generator for valid, fully labeled session corpora. Used by the
// test suite and the `synth` command; never a stand-in for real logs.

#include <array>
#include <cstdint>
#include <optional>

#include "usejudge/session.hpp"

namespace usejudge {

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t sessions = 50;
  std::size_t users = 10;  // sessions are spread over users; tasks are shared between users

  // Exact totals; 0 draws each session's queries (1..max) and each query's
  // clicks (1..max) independently.
  std::size_t queries = 0;
  std::size_t data_points = 0;
  int max_queries_per_session = 4;
  int max_clicks_per_query = 4;

  // Documents are reused round-robin when non-zero, else every click is a new document.
  std::size_t distinct_documents = 0;

  // Probability that a clicked document carries relevance labels.
  double relevance_coverage = 1.0;

  // Exact human label histogram (0..3); its sum fixes the number of data points.
  std::optional<std::array<std::size_t, 4>> label_counts;

  DatasetTag dataset_tag = DatasetTag::kSynthetic;
};

/// Deterministic in `options` (including the seed). Every session passes
/// validate_session, has at least one click per query, and lists each
/// document at most once per session. Throws ConfigError on impossible totals.
Corpus generate_corpus(const SyntheticOptions& options);

/// Shape of a THUIR-like corpus: 447 sessions from 50 users over 9 tasks,
/// 735 queries, 3,041 clicked-document data points over 1,431 documents.
SyntheticOptions thuir_shape(std::uint64_t seed = 7);

}  // namespace usejudge
