#include "usejudge/synthetic.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "usejudge/error.hpp"

namespace usejudge {

namespace {

// Kept free of the behavior-signal vocabulary so masking checks stay meaningful.
constexpr std::array<std::string_view, 24> kWords = {
    "river",  "garden",  "engine", "harbor", "violin",   "glacier", "orbit",  "pepper",
    "lantern", "canyon", "falcon", "meadow", "copper",   "tunnel",  "prairie", "saddle",
    "beacon", "quarry",  "willow", "marble", "compass", "harvest", "summit", "ferry"};

constexpr std::array<std::string_view, 6> kTopics = {
    "travel planning", "home repair", "medical symptoms", "used cars", "local history", "recipes"};

using Rng = std::mt19937_64;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// `total` split into `parts` positive counts.
std::vector<std::size_t> split(Rng& rng, std::size_t total, std::size_t parts) {
  std::vector<std::size_t> out(parts, 1);
  for (std::size_t i = parts; i < total; ++i) ++out[uniform(rng, 0, parts - 1)];
  return out;
}

std::string phrase(Rng& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += kWords[uniform(rng, 0, kWords.size() - 1)];
  }
  return out;
}

int clamp_label(int value, int lo, int hi) { return std::clamp(value, lo, hi); }

}  // namespace

Corpus generate_corpus(const SyntheticOptions& o) {
  if (o.sessions == 0) throw ConfigError("synthetic corpus needs at least one session");
  if (o.users == 0) throw ConfigError("synthetic corpus needs at least one user");
  if (o.max_queries_per_session < 1 || o.max_clicks_per_query < 1) {
    throw ConfigError("synthetic limits must be at least 1");
  }
  Rng rng(o.seed);

  std::size_t data_points = o.data_points;
  if (o.label_counts) {
    std::size_t planted = 0;
    for (std::size_t c : *o.label_counts) planted += c;
    if (data_points != 0 && data_points != planted) {
      throw ConfigError("label counts do not add up to the requested data points");
    }
    data_points = planted;
  }

  // Queries per session.
  std::vector<std::size_t> queries_per_session;
  if (o.queries != 0) {
    if (o.queries < o.sessions) throw ConfigError("fewer queries than sessions");
    queries_per_session = split(rng, o.queries, o.sessions);
  } else {
    for (std::size_t s = 0; s < o.sessions; ++s) {
      queries_per_session.push_back(uniform(rng, 1, static_cast<std::size_t>(o.max_queries_per_session)));
    }
  }
  std::size_t total_queries = 0;
  for (std::size_t q : queries_per_session) total_queries += q;

  // Clicks per query.
  std::vector<std::size_t> clicks_per_query;
  if (data_points != 0) {
    if (data_points < total_queries) throw ConfigError("fewer data points than queries");
    clicks_per_query = split(rng, data_points, total_queries);
  } else {
    for (std::size_t q = 0; q < total_queries; ++q) {
      clicks_per_query.push_back(uniform(rng, 1, static_cast<std::size_t>(o.max_clicks_per_query)));
    }
  }
  std::size_t total_points = 0;
  for (std::size_t c : clicks_per_query) total_points += c;

  std::vector<int> labels;
  if (o.label_counts) {
    for (int label = 0; label < 4; ++label) labels.insert(labels.end(), (*o.label_counts)[label], label);
    std::shuffle(labels.begin(), labels.end(), rng);
  } else {
    std::discrete_distribution<int> draw({15, 25, 30, 30});
    for (std::size_t i = 0; i < total_points; ++i) labels.push_back(draw(rng));
  }

  const std::size_t tasks_per_user = (o.sessions + o.users - 1) / o.users;
  std::vector<std::string> task_topics;
  for (std::size_t t = 0; t < tasks_per_user; ++t) {
    task_topics.push_back(fmt::format("{} ({})", kTopics[t % kTopics.size()], phrase(rng, 2)));
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Corpus corpus;
  corpus.source_path = fmt::format("synthetic:seed={}", o.seed);
  std::size_t query_index = 0;
  std::size_t point = 0;
  for (std::size_t s = 0; s < o.sessions; ++s) {
    TaskSession session;
    // Round-robin, so every user gets a session once there are enough of them.
    const std::size_t user = s % o.users;
    const std::size_t task = s / o.users;
    session.user_id = fmt::format("u{:03}", user + 1);
    session.task_id = fmt::format("t{:02}", task + 1);
    session.task_description = "Find information about " + task_topics[task] + ".";
    session.dataset_tag = o.dataset_tag;

    std::int64_t clock = static_cast<std::int64_t>(uniform(rng, 0, 2000));
    int label_sum = 0;
    std::size_t label_n = 0;
    for (std::size_t qi = 0; qi < queries_per_session[s]; ++qi, ++query_index) {
      QueryRecord query;
      query.query_position = static_cast<int>(qi + 1);
      query.query_text = phrase(rng, 1 + uniform(rng, 1, 3));
      query.events.push_back({EventKind::kQueryIssue, clock, std::nullopt});
      clock += static_cast<std::int64_t>(uniform(rng, 1500, 6000));

      int query_label_sum = 0;
      for (std::size_t ci = 0; ci < clicks_per_query[query_index]; ++ci, ++point) {
        const std::size_t doc = o.distinct_documents ? point % o.distinct_documents : point;
        ClickedDocument d;
        d.doc_id = fmt::format("d{:05}", doc);
        d.url = fmt::format("https://example.org/{}/{}", doc % 97, doc);
        // Text depends only on the document so reused documents look the same.
        Rng doc_rng(o.seed ^ (0x9e3779b97f4a7c15ULL * (doc + 1)));
        d.title = phrase(doc_rng, 3);
        d.title[0] = static_cast<char>(d.title[0] - 'a' + 'A');
        d.summary = phrase(doc_rng, 10) + ".";
        d.rank = static_cast<int>(ci + 1 + uniform(rng, 0, 2));
        d.usefulness_human = labels[point];
        if (unit(rng) < o.relevance_coverage) {
          d.query_relevance = clamp_label(d.usefulness_human + static_cast<int>(uniform(rng, 0, 2)) - 1, 0, 3);
          d.task_relevance = clamp_label(d.usefulness_human + static_cast<int>(uniform(rng, 0, 2)) - 1, 0, 3);
        }
        query_label_sum += d.usefulness_human;

        if (uniform(rng, 0, 2) == 0) {
          query.events.push_back({EventKind::kHover, clock, d.doc_id});
          clock += static_cast<std::int64_t>(uniform(rng, 100, 900));
        }
        query.events.push_back({EventKind::kClick, clock, d.doc_id});
        // Useful documents are read longer.
        const std::int64_t reading =
            static_cast<std::int64_t>(uniform(rng, 2000, 8000)) * (1 + d.usefulness_human);
        const std::int64_t until = clock + reading;
        while (clock + 3000 < until) {
          clock += static_cast<std::int64_t>(uniform(rng, 800, 3000));
          query.events.push_back(
              {uniform(rng, 0, 1) ? EventKind::kScroll : EventKind::kMove, clock, std::nullopt});
        }
        clock = until;
        if (d.usefulness_human == 3 && uniform(rng, 0, 3) == 0) {
          // A second visit from the result page.
          clock += static_cast<std::int64_t>(uniform(rng, 500, 2000));
          query.events.push_back({EventKind::kClick, clock, d.doc_id});
          clock += static_cast<std::int64_t>(uniform(rng, 1000, 5000));
        }
        query.clicked_documents.push_back(std::move(d));
      }
      const double mean = static_cast<double>(query_label_sum) /
                          static_cast<double>(query.clicked_documents.size());
      query.query_satisfaction = clamp_label(static_cast<int>(mean + 1.5) + static_cast<int>(uniform(rng, 0, 1)), 1, 5);
      label_sum += query_label_sum;
      label_n += query.clicked_documents.size();
      clock += static_cast<std::int64_t>(uniform(rng, 500, 3000));
      session.queries.push_back(std::move(query));
    }
    session.queries.back().events.push_back({EventKind::kSessionEnd, clock, std::nullopt});
    const double mean = static_cast<double>(label_sum) / static_cast<double>(label_n);
    session.session_satisfaction = clamp_label(static_cast<int>(mean + 1.5) + static_cast<int>(uniform(rng, 0, 1)), 1, 5);
    corpus.sessions.push_back(std::move(session));
  }
  corpus.summary = summarize(corpus.sessions);
  return corpus;
}

SyntheticOptions thuir_shape(std::uint64_t seed) {
  SyntheticOptions o;
  o.seed = seed;
  o.sessions = 447;
  o.users = 50;
  o.queries = 735;
  o.data_points = 3041;
  o.distinct_documents = 1431;
  o.dataset_tag = DatasetTag::kThuirStyle;
  return o;
}

}  // namespace usejudge
