#include "usejudge/batching.hpp"

#include <cctype>

#include "usejudge/error.hpp"
#include "usejudge/hash.hpp"

namespace usejudge {

using nlohmann::json;

namespace {

BatchItem make_item(const QueryRecord& q, const ClickedDocument& d, const QueryMetrics& qm,
                    const DocumentMetrics& dm) {
  BatchItem item;
  item.query_text = q.query_text;
  item.query_position = q.query_position;
  item.doc_id = d.doc_id;
  item.url = d.url;
  item.title = d.title;
  item.summary = d.summary;
  item.rank = d.rank;
  item.task_relevance = d.task_relevance;
  item.query_relevance = d.query_relevance;
  item.query_satisfaction = q.query_satisfaction;
  item.url_ctr = dm.url_ctr;
  item.url_dwell_ms = dm.url_dwell_ms;
  item.query_dwell_ms = qm.query_dwell_ms;
  return item;
}

SessionContext make_context(const TaskSession& s, const DerivedMetrics& m) {
  SessionContext ctx;
  ctx.task_description = s.task_description;
  ctx.session_satisfaction = s.session_satisfaction;
  ctx.task_dwell_ms = m.task_dwell_ms;
  ctx.avg_query_dwell_ms = m.avg_query_dwell_ms;
  return ctx;
}

template <typename T>
void put(json& out, const char* key, const std::optional<T>& value) {
  if (value) out[key] = *value;
}

template <typename T>
std::optional<T> get(const json& in, const char* key) {
  auto it = in.find(key);
  if (it == in.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::string FeatureGroupMask::code() const {
  std::string out;
  if (relevance) out += 'R';
  if (satisfaction) out += 'S';
  if (user_behavior) out += 'U';
  return out.empty() ? "QD" : out;
}

std::optional<FeatureGroupMask> parse_mask(std::string_view text) {
  std::string upper;
  for (char c : text) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "QD" || upper == "NONE") return FeatureGroupMask::none();
  if (upper.empty()) return std::nullopt;
  FeatureGroupMask mask = FeatureGroupMask::none();
  for (char c : upper) {
    bool* flag = c == 'R'   ? &mask.relevance
                 : c == 'S' ? &mask.satisfaction
                 : c == 'U' ? &mask.user_behavior
                            : nullptr;
    if (flag == nullptr || *flag) return std::nullopt;  // unknown or repeated letter
    *flag = true;
  }
  return mask;
}

std::array<FeatureGroupMask, 7> ablation_masks() {
  return {{
      {true, true, true},
      {true, true, false},
      {true, false, true},
      {false, true, true},
      {true, false, false},
      {false, true, false},
      {false, false, true},
  }};
}

std::string_view to_string(BatchScope scope) {
  return scope == BatchScope::kPoint ? "POINT" : "SESSION";
}

std::optional<BatchScope> parse_scope(std::string_view text) {
  if (text == "POINT" || text == "point") return BatchScope::kPoint;
  if (text == "SESSION" || text == "session") return BatchScope::kSession;
  return std::nullopt;
}

std::string make_batch_id(std::string_view user_id, std::string_view task_id,
                          std::string_view unit, const FeatureGroupMask& mask) {
  const std::string code = mask.code();
  std::string key;
  for (std::string_view part : {user_id, task_id, unit, std::string_view(code)}) {
    key += std::to_string(part.size());
    key += ':';
    key += part;
  }
  return short_hash(key);
}

JudgmentBatch apply_mask(JudgmentBatch batch) {
  const FeatureGroupMask& mask = batch.mask;
  for (BatchItem& item : batch.items) {
    if (!mask.relevance) {
      item.task_relevance.reset();
      item.query_relevance.reset();
    }
    if (!mask.satisfaction) item.query_satisfaction.reset();
    if (!mask.user_behavior) {
      item.url_ctr.reset();
      item.url_dwell_ms.reset();
      item.query_dwell_ms.reset();
    }
  }
  if (!mask.satisfaction) batch.session.session_satisfaction.reset();
  if (!mask.user_behavior) {
    batch.session.task_dwell_ms.reset();
    batch.session.avg_query_dwell_ms.reset();
  }
  return batch;
}

std::vector<JudgmentBatch> make_baseline_batches(const Corpus& corpus,
                                                 const FeatureGroupMask& mask) {
  std::vector<JudgmentBatch> out;
  out.reserve(corpus.summary.data_points);
  for (const TaskSession& s : corpus.sessions) {
    const DerivedMetrics m = derive_metrics(s);
    const SessionContext ctx = make_context(s, m);
    for (std::size_t qi = 0; qi < s.queries.size(); ++qi) {
      const QueryRecord& q = s.queries[qi];
      for (std::size_t di = 0; di < q.clicked_documents.size(); ++di) {
        const ClickedDocument& d = q.clicked_documents[di];
        JudgmentBatch b;
        // The same document may be clicked under two queries of one session.
        const std::string unit = "q" + std::to_string(q.query_position) + ":" + d.doc_id;
        b.batch_id = make_batch_id(s.user_id, s.task_id, unit, mask);
        b.scope = BatchScope::kPoint;
        b.user_id = s.user_id;
        b.task_id = s.task_id;
        b.dataset_tag = s.dataset_tag;
        b.items.push_back(make_item(q, d, m.queries[qi], m.queries[qi].documents[di]));
        b.session = ctx;
        b.mask = mask;
        b.ground_truth.push_back(d.usefulness_human);
        out.push_back(apply_mask(std::move(b)));
      }
    }
  }
  return out;
}

std::vector<JudgmentBatch> make_session_batches(const Corpus& corpus,
                                                const FeatureGroupMask& mask) {
  std::vector<JudgmentBatch> out;
  out.reserve(corpus.sessions.size());
  for (const TaskSession& s : corpus.sessions) {
    const DerivedMetrics m = derive_metrics(s);
    JudgmentBatch b;
    b.batch_id = make_batch_id(s.user_id, s.task_id, "SESSION", mask);
    b.scope = BatchScope::kSession;
    b.user_id = s.user_id;
    b.task_id = s.task_id;
    b.dataset_tag = s.dataset_tag;
    b.session = make_context(s, m);
    b.mask = mask;
    for (std::size_t qi = 0; qi < s.queries.size(); ++qi) {
      const QueryRecord& q = s.queries[qi];
      for (std::size_t di = 0; di < q.clicked_documents.size(); ++di) {
        b.items.push_back(make_item(q, q.clicked_documents[di], m.queries[qi],
                                    m.queries[qi].documents[di]));
        b.ground_truth.push_back(q.clicked_documents[di].usefulness_human);
      }
    }
    out.push_back(apply_mask(std::move(b)));
  }
  return out;
}

std::vector<JudgmentBatch> make_batches(const Corpus& corpus, BatchScope scope,
                                        const FeatureGroupMask& mask) {
  return scope == BatchScope::kPoint ? make_baseline_batches(corpus, mask)
                                     : make_session_batches(corpus, mask);
}

json batch_to_json(const JudgmentBatch& b) {
  json out;
  out["format_version"] = kCorpusFormatVersion;
  out["batch_id"] = b.batch_id;
  out["scope"] = to_string(b.scope);
  out["user_id"] = b.user_id;
  out["task_id"] = b.task_id;
  out["dataset_tag"] = to_string(b.dataset_tag);
  out["mask"] = b.mask.code();
  json session = json::object();
  put(session, "task_description", b.session.task_description);
  put(session, "session_satisfaction", b.session.session_satisfaction);
  put(session, "task_dwell_ms", b.session.task_dwell_ms);
  put(session, "avg_query_dwell_ms", b.session.avg_query_dwell_ms);
  out["session"] = std::move(session);
  json items = json::array();
  for (const BatchItem& it : b.items) {
    json j;
    j["query_text"] = it.query_text;
    j["query_position"] = it.query_position;
    j["doc_id"] = it.doc_id;
    j["url"] = it.url;
    j["title"] = it.title;
    j["summary"] = it.summary;
    j["rank"] = it.rank;
    put(j, "task_relevance", it.task_relevance);
    put(j, "query_relevance", it.query_relevance);
    put(j, "query_satisfaction", it.query_satisfaction);
    put(j, "url_ctr", it.url_ctr);
    put(j, "url_dwell_ms", it.url_dwell_ms);
    put(j, "query_dwell_ms", it.query_dwell_ms);
    items.push_back(std::move(j));
  }
  out["items"] = std::move(items);
  out["ground_truth"] = b.ground_truth;
  return out;
}

JudgmentBatch batch_from_json(const json& in) {
  try {
    JudgmentBatch b;
    b.batch_id = in.at("batch_id").get<std::string>();
    auto scope = parse_scope(in.at("scope").get<std::string>());
    auto tag = parse_dataset_tag(in.at("dataset_tag").get<std::string>());
    auto mask = parse_mask(in.at("mask").get<std::string>());
    if (!scope || !tag || !mask) throw InputError("batch: bad scope, dataset_tag or mask");
    b.scope = *scope;
    b.dataset_tag = *tag;
    b.mask = *mask;
    b.user_id = in.at("user_id").get<std::string>();
    b.task_id = in.at("task_id").get<std::string>();
    const json& s = in.at("session");
    b.session.task_description = get<std::string>(s, "task_description");
    b.session.session_satisfaction = get<int>(s, "session_satisfaction");
    b.session.task_dwell_ms = get<std::int64_t>(s, "task_dwell_ms");
    b.session.avg_query_dwell_ms = get<double>(s, "avg_query_dwell_ms");
    for (const json& j : in.at("items")) {
      BatchItem it;
      it.query_text = j.at("query_text").get<std::string>();
      it.query_position = j.at("query_position").get<int>();
      it.doc_id = j.at("doc_id").get<std::string>();
      it.url = j.at("url").get<std::string>();
      it.title = j.at("title").get<std::string>();
      it.summary = j.at("summary").get<std::string>();
      it.rank = j.at("rank").get<int>();
      it.task_relevance = get<int>(j, "task_relevance");
      it.query_relevance = get<int>(j, "query_relevance");
      it.query_satisfaction = get<int>(j, "query_satisfaction");
      it.url_ctr = get<double>(j, "url_ctr");
      it.url_dwell_ms = get<std::int64_t>(j, "url_dwell_ms");
      it.query_dwell_ms = get<std::int64_t>(j, "query_dwell_ms");
      b.items.push_back(std::move(it));
    }
    b.ground_truth = in.at("ground_truth").get<std::vector<int>>();
    return b;
  } catch (const json::exception& e) {
    throw InputError(std::string("batch: ") + e.what());
  }
}

}  // namespace usejudge
