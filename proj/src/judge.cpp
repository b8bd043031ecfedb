#include "usejudge/judge.hpp"

#include <fstream>
#include <sstream>

#include "usejudge/error.hpp"
#include "usejudge/hash.hpp"

namespace usejudge {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops markdown emphasis and code markers a model may wrap the trailer in.
std::string undecorate(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c != '*' && c != '`' && c != '_') out += c;
  }
  return std::string(trim(out));
}

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

void write_atomically(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<int> parse_labels(std::string_view response, std::size_t expected_count) {
  std::optional<std::string> trailer;
  std::size_t begin = 0;
  while (begin <= response.size()) {
    std::size_t end = response.find('\n', begin);
    if (end == std::string_view::npos) end = response.size();
    const std::string line = undecorate(response.substr(begin, end - begin));
    if (line.starts_with("LABELS:")) trailer = line.substr(7);
    begin = end + 1;
  }
  const std::string raw(response);
  if (!trailer) throw ResponseParseError("no 'LABELS:' trailer in response", raw);

  std::vector<int> labels;
  std::stringstream tokens(*trailer);
  std::string token;
  while (std::getline(tokens, token, ',')) {
    const std::string_view t = trim(token);
    if (t.empty() && labels.empty() && tokens.eof()) break;
    if (t.empty() || t.find_first_not_of("-0123456789") != std::string_view::npos || t.size() > 3) {
      throw ResponseParseError("malformed label '" + std::string(t) + "'", raw);
    }
    const int value = std::stoi(std::string(t));
    if (value < 0 || value > 3) {
      throw ResponseParseError("label out of range: " + std::string(t), raw);
    }
    labels.push_back(value);
  }
  if (labels.size() != expected_count) {
    throw ResponseParseError("expected " + std::to_string(expected_count) + " labels, found " +
                                 std::to_string(labels.size()),
                             raw);
  }
  return labels;
}

std::string cache_key(const RenderedPrompt& prompt, std::string_view backend_identity,
                      const DecodingParams& decoding) {
  const std::string decoding_key = decoding.key();
  std::string material;
  for (std::string_view part : {std::string_view(prompt.system), std::string_view(prompt.user),
                                backend_identity, std::string_view(decoding_key)}) {
    material += std::to_string(part.size());
    material += ':';
    material += part;
  }
  return sha256_hex(material);
}

ResponseStore::ResponseStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  std::ifstream in(dir_ / "index.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json entry = json::parse(line);
      StoredResponse stored;
      stored.ref = entry.at("ref").get<std::string>();
      stored.wall_ms = entry.value("wall_ms", std::int64_t{0});
      stored.prompt_tokens = get<int>(entry, "prompt_tokens");
      stored.completion_tokens = get<int>(entry, "completion_tokens");
      stored.text = read(stored.ref);
      index_.emplace(entry.at("key").get<std::string>(), std::move(stored));
    } catch (const std::exception&) {
      // A torn final line from an interrupted run; the entry is simply re-fetched.
    }
  }
}

std::optional<StoredResponse> ResponseStore::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StoredResponse ResponseStore::put(const std::string& key, const ChatResponse& response,
                                  std::int64_t wall_ms) {
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(key); it != index_.end()) return it->second;

  StoredResponse stored;
  stored.text = response.text;
  stored.ref = sha256_hex(response.text);
  stored.wall_ms = wall_ms;
  stored.prompt_tokens = response.prompt_tokens;
  stored.completion_tokens = response.completion_tokens;

  const auto text_path = dir_ / (stored.ref + ".txt");
  if (!std::filesystem::exists(text_path)) write_atomically(text_path, stored.text);

  json entry{{"key", key}, {"ref", stored.ref}, {"wall_ms", wall_ms}};
  put_opt(entry, "prompt_tokens", stored.prompt_tokens);
  put_opt(entry, "completion_tokens", stored.completion_tokens);
  std::ofstream index(dir_ / "index.jsonl", std::ios::app | std::ios::binary);
  index << entry.dump() << '\n';
  if (!index) throw Error("cannot append to " + (dir_ / "index.jsonl").string());

  index_.emplace(key, stored);
  return stored;
}

std::string ResponseStore::read(const std::string& ref) const {
  std::ifstream in(dir_ / (ref + ".txt"), std::ios::binary);
  if (!in) throw Error("response " + ref + " missing from " + dir_.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t ResponseStore::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

json record_to_json(const JudgmentRecord& r) {
  json out{{"batch_id", r.batch_id},
           {"item_index", r.item_index},
           {"predicted_label", r.predicted_label},
           {"raw_response_ref", r.raw_response_ref},
           {"backend", r.backend},
           {"template_version", r.template_version},
           {"wall_ms", r.wall_ms}};
  put_opt(out, "prompt_tokens", r.prompt_tokens);
  put_opt(out, "completion_tokens", r.completion_tokens);
  return out;
}

JudgmentRecord record_from_json(const json& in) {
  try {
    JudgmentRecord r;
    r.batch_id = in.at("batch_id").get<std::string>();
    r.item_index = in.at("item_index").get<std::size_t>();
    r.predicted_label = in.at("predicted_label").get<int>();
    r.raw_response_ref = in.at("raw_response_ref").get<std::string>();
    r.backend = in.at("backend").get<std::string>();
    r.template_version = in.at("template_version").get<std::string>();
    r.wall_ms = in.value("wall_ms", std::int64_t{0});
    r.prompt_tokens = get<int>(in, "prompt_tokens");
    r.completion_tokens = get<int>(in, "completion_tokens");
    if (r.predicted_label < 0 || r.predicted_label > 3) {
      throw InputError("predicted_label out of range 0-3");
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("record: ") + e.what());
  }
}

Judge::Judge(Dispatcher& dispatcher, ResponseStore& store, DecodingParams decoding,
             const PromptTemplate& tmpl)
    : dispatcher_(dispatcher), store_(store), decoding_(decoding), template_(tmpl) {}

JudgeOutcome Judge::judge_batch(const JudgmentBatch& batch, JudgeMethod method,
                                const RubricDocument* rubric) {
  const RenderedPrompt prompt = render_prompt(batch, method, rubric, template_);
  const std::string identity = dispatcher_.backend().identity();
  const std::string key = cache_key(prompt, identity, decoding_);

  JudgeOutcome outcome;
  std::optional<StoredResponse> stored = store_.lookup(key);
  if (stored) {
    outcome.cache_hit = true;
  } else {
    ChatRequest request;
    request.system = prompt.system;
    request.user = prompt.user;
    request.decoding = decoding_;
    request.expected_labels = batch.items.size();
    request.reference_labels = batch.ground_truth;
    Dispatcher::Result result = dispatcher_.call(request);
    outcome.attempts = result.attempts;
    stored = store_.put(key, result.response, result.elapsed.count());
  }

  std::vector<int> labels;
  try {
    labels = parse_labels(stored->text, batch.items.size());
  } catch (const ResponseParseError& e) {
    throw JudgeResponseError(e, stored->ref);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    JudgmentRecord r;
    r.batch_id = batch.batch_id;
    r.item_index = i;
    r.predicted_label = labels[i];
    r.raw_response_ref = stored->ref;
    r.backend = identity;
    r.template_version = template_.version;
    r.wall_ms = stored->wall_ms;
    r.prompt_tokens = stored->prompt_tokens;
    r.completion_tokens = stored->completion_tokens;
    outcome.records.push_back(std::move(r));
  }
  return outcome;
}

}  // namespace usejudge
