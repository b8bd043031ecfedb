#include "usejudge/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "usejudge/batching.hpp"
#include "usejudge/error.hpp"
#include "usejudge/experiment.hpp"
#include "usejudge/hash.hpp"
#include "usejudge/induction.hpp"
#include "usejudge/report.hpp"
#include "usejudge/session.hpp"
#include "usejudge/synthetic.hpp"

namespace usejudge {

namespace {

using nlohmann::json;

struct BackendOptions {
  std::string descriptor = "echo";
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 2048;
  int max_inflight = 4;
  int max_attempts = 3;
  std::vector<int> backoff_ms{1000, 4000};
  int requests_per_minute = 0;
};

struct RunOptions {
  std::string corpus;
  std::string method = "BASELINE_COT";
  std::string mask = "RSU";
  std::string scope;
  std::string rubric;
  std::string template_path;
  std::string out;
  std::string cache;
  bool strict = false;
  std::uint64_t seed = 0;
  BackendOptions backend;
};

struct EvalCliOptions {
  std::string run_dir;
  std::string out;
  std::string relevance = "query";
  bool binarize = false;
  std::string f1 = "macro";
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.descriptor,
                  "echo | fixed:<0-3> | scripted:<file> | http | http:bedrock")
      ->capture_default_str();
  cmd->add_option("--endpoint", o.endpoint, "HTTP endpoint (base URL or full path)");
  cmd->add_option("--model", o.model, "Model name for HTTP backends");
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--timeout", o.timeout_seconds, "HTTP timeout in seconds")->capture_default_str();
  cmd->add_option("--temperature", o.temperature)->capture_default_str();
  cmd->add_option("--top-p", o.top_p)->capture_default_str();
  cmd->add_option("--max-tokens", o.max_tokens)->capture_default_str();
  cmd->add_option("--max-inflight", o.max_inflight, "Concurrent requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--retries", o.max_attempts, "Attempts per request, including the first")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--backoff-ms", o.backoff_ms, "Delays between attempts; the last one repeats")
      ->capture_default_str();
  cmd->add_option("--rpm", o.requests_per_minute, "Requests per minute, 0 = unlimited")
      ->capture_default_str();
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("corpus,--corpus", o.corpus, "Session corpus (JSONL)")->required();
  cmd->add_option("--method", o.method, "BASELINE_COT | SESSION_PERSONALIZED | TRUE_RUBRIC")
      ->capture_default_str();
  cmd->add_option("--scope", o.scope, "POINT | SESSION (default depends on the method)");
  cmd->add_option("--rubric", o.rubric, "Rubric file, shipped:thuir or shipped:qref");
  cmd->add_option("--template", o.template_path, "Judging template file (default: built-in)");
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--cache", o.cache, "Response cache directory (default: <out>/responses)");
  cmd->add_flag("--strict", o.strict, "Stop at the first failed batch");
  cmd->add_option("--seed", o.seed, "Recorded in the manifest")->capture_default_str();
  add_backend_options(cmd, o.backend);
}

BackendConfig backend_config(const BackendOptions& o) {
  BackendConfig c;
  parse_backend_kind(o.descriptor, c);
  c.endpoint = o.endpoint;
  c.model = o.model;
  c.api_key_env = o.api_key_env;
  c.timeout_seconds = o.timeout_seconds;
  c.decoding.temperature = o.temperature;
  c.decoding.top_p = o.top_p;
  c.decoding.max_tokens = o.max_tokens;
  c.rate.max_inflight = o.max_inflight;
  c.rate.requests_per_minute = o.requests_per_minute;
  c.retry.max_attempts = o.max_attempts;
  c.retry.backoff.clear();
  for (int ms : o.backoff_ms) {
    if (ms < 0) throw ConfigError("--backoff-ms values must be non-negative");
    c.retry.backoff.emplace_back(ms);
  }
  if (c.kind == BackendKind::kHttpChat && (c.endpoint.empty() || c.model.empty())) {
    throw ConfigError("http backends need --endpoint and --model");
  }
  return c;
}

struct PreparedRun {
  Corpus corpus;
  ExperimentConfig config;
  std::optional<PromptTemplate> tmpl;
  std::unique_ptr<ChatBackend> backend;
};

// `prepared.config.prompt_template` points into `prepared`, so it is returned by pointer.
std::unique_ptr<PreparedRun> prepare_run(const RunOptions& o) {
  auto p = std::make_unique<PreparedRun>();
  ExperimentConfig& c = p->config;
  const auto method = parse_method(o.method);
  if (!method) throw ConfigError("unknown method '" + o.method + "'");
  c.method = *method;
  const auto mask = parse_mask(o.mask);
  if (!mask) throw ConfigError("bad mask '" + o.mask + "' (letters from R, S, U)");
  c.mask = *mask;
  if (!o.scope.empty()) {
    const auto scope = parse_scope(o.scope);
    if (!scope) throw ConfigError("unknown scope '" + o.scope + "'");
    c.scope = *scope;
  }
  if (c.method == JudgeMethod::kTrueRubric && o.rubric.empty()) {
    throw ConfigError("rubric required for method TRUE");
  }
  if (!o.rubric.empty()) c.rubric = resolve_rubric(o.rubric);
  if (!o.template_path.empty()) {
    p->tmpl = PromptTemplate::load(o.template_path);
    c.prompt_template = &*p->tmpl;
  }
  c.backend = backend_config(o.backend);
  c.strict = o.strict;
  c.seed = o.seed;
  c.out_dir = o.out;
  if (!o.cache.empty()) c.cache_dir = std::filesystem::path(o.cache);
  p->corpus = ingest_corpus(o.corpus);
  p->backend = make_backend(c.backend);
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

EvalOptions eval_options(const EvalCliOptions& o) {
  EvalOptions e;
  if (o.relevance == "query") {
    e.relevance_source = RelevanceSource::kQueryRelevance;
  } else if (o.relevance == "task") {
    e.relevance_source = RelevanceSource::kTaskRelevance;
  } else {
    throw ConfigError("--relevance must be 'query' or 'task'");
  }
  if (o.f1 == "macro") {
    e.f1_average = F1Average::kMacro;
  } else if (o.f1 == "positive") {
    e.f1_average = F1Average::kPositive;
  } else {
    throw ConfigError("--f1 must be 'macro' or 'positive'");
  }
  e.binarize = o.binarize;
  return e;
}

void add_eval_options(CLI::App* cmd, EvalCliOptions& o) {
  cmd->add_option("run_dir,--run", o.run_dir, "Run directory written by `judge`")->required();
  cmd->add_option("--out", o.out, "Where to write the report files");
  cmd->add_option("--relevance", o.relevance, "Quadrant relevance label: query | task")
      ->capture_default_str();
  cmd->add_flag("--binarize", o.binarize, "Also score binary labels (MSE, MAE, Acc, F1)");
  cmd->add_option("--f1", o.f1, "F1 averaging: macro | positive")->capture_default_str();
}

int cmd_ingest(const std::string& path, bool as_json, std::ostream& out) {
  const Corpus corpus = ingest_corpus(path);
  const CorpusSummary& s = corpus.summary;
  if (as_json) {
    out << json{{"sessions", s.sessions}, {"queries", s.queries},   {"clicks", s.clicks},
                {"data_points", s.data_points}, {"users", s.users}, {"tasks", s.tasks}}
               .dump()
        << "\n";
  } else {
    out << fmt::format(
        "{}\n  sessions     {}\n  queries      {}\n  clicks       {} distinct documents\n"
        "  data points  {}\n  users        {}\n  tasks        {}\n",
        path, s.sessions, s.queries, s.clicks, s.data_points, s.users, s.tasks);
  }
  return kExitOk;
}

int cmd_batch(const std::string& corpus_path, const std::string& scope_text,
              const std::string& mask_text, const std::string& out_path, std::ostream& out) {
  const auto scope = parse_scope(scope_text);
  if (!scope) throw ConfigError("unknown scope '" + scope_text + "'");
  const auto mask = parse_mask(mask_text);
  if (!mask) throw ConfigError("bad mask '" + mask_text + "'");
  const Corpus corpus = ingest_corpus(corpus_path);
  std::string text;
  const auto batches = make_batches(corpus, *scope, *mask);
  for (const JudgmentBatch& b : batches) text += batch_to_json(b).dump() + "\n";
  if (out_path.empty() || out_path == "-") {
    out << text;
  } else {
    write_text(out_path, text);
    out << fmt::format("{} {} batches written to {}\n", batches.size(), to_string(*scope), out_path);
  }
  return kExitOk;
}

int cmd_judge(const RunOptions& o, CLI::App* cmd, std::ostream& out) {
  auto run = prepare_run(o);
  std::filesystem::create_directories(run->config.out_dir);
  write_text(run->config.out_dir / "config.ini",
             "# Replay with: usejudge judge --config <this file>\n[judge]\n" +
                 cmd->config_to_str(true, false));
  const RunResult result = run_experiment(run->corpus, run->config, *run->backend);
  const RunSummary& s = result.summary;
  out << fmt::format("{} batches, {} judged, {} failed, {} records, {} cache hits, {} retries\n",
                     s.batches, s.judged, s.failed, s.records, s.cache_hits, s.retries);
  out << fmt::format("run directory: {}\n", run->config.out_dir.string());
  if (!result.failures.empty()) {
    out << fmt::format("{} batch(es) failed; see {}\n", result.failures.size(),
                       (run->config.out_dir / "failures.jsonl").string());
    return kExitFailures;
  }
  return kExitOk;
}

int cmd_evaluate(const EvalCliOptions& o, std::ostream& out) {
  const LoadedRun run = load_run(o.run_dir);
  const EvalReport report = evaluate(run.scored, eval_options(o));
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(o.run_dir) : std::filesystem::path(o.out);
  write_report(report, run.manifest, dir);
  for (const CorrelationResult& c : report.correlations) {
    out << fmt::format("{:<10} {}\n", to_string(c.grouping), format_rho(c.rho));
  }
  if (run.unjudged_items > 0) {
    out << fmt::format("{} item(s) have no judgment; see {}\n", run.unjudged_items,
                       (std::filesystem::path(o.run_dir) / "failures.jsonl").string());
  }
  out << fmt::format("report written to {}\n", (dir / "report.txt").string());
  return kExitOk;
}

int cmd_report(const EvalCliOptions& o, std::ostream& out) {
  const LoadedRun run = load_run(o.run_dir);
  const EvalReport report = evaluate(run.scored, eval_options(o));
  const std::filesystem::path dir =
      o.out.empty() ? std::filesystem::path(o.run_dir) / "report" : std::filesystem::path(o.out);
  write_report(report, run.manifest, dir);
  const std::string title = fmt::format("Usefulness labels: human vs {}",
                                        run.manifest.value("method", std::string("predicted")));
  write_text(dir / "label_distribution.svg", distribution_svg(report.distribution, title));
  out << fmt::format("tables and plot written to {}\n", dir.string());
  return kExitOk;
}

int cmd_ablate(const RunOptions& o, std::ostream& out) {
  auto run = prepare_run(o);
  const auto rows = ablation_run(run->corpus, run->config, *run->backend);
  write_ablation(rows, run->config.out_dir);
  bool failed = false;
  for (const AblationRow& row : rows) {
    out << fmt::format("{:<4} {}{}\n", row.mask.code(), format_rho(row.overall.rho),
                       row.error ? "  (" + *row.error + ")" : "");
    failed = failed || row.error.has_value();
  }
  out << fmt::format("table written to {}\n", (run->config.out_dir / "ablation.tsv").string());
  return failed ? kExitFailures : kExitOk;
}

struct InduceOptions {
  std::string corpus;
  std::string subset;
  std::string out;
  int iterations = 3;
  std::string dataset;
  std::string version = "induced/1";
  BackendOptions backend;
};

std::set<std::pair<std::string, std::string>> read_subset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open subset file " + path);
  std::set<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'user_id<TAB>task_id'", path, line_no));
    }
    out.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  if (out.empty()) throw ConfigError("subset file " + path + " names no sessions");
  return out;
}

int cmd_induce(const InduceOptions& o, std::ostream& out) {
  if (o.iterations < 1) throw ConfigError("--iterations must be at least 1");
  BackendConfig bc = backend_config(o.backend);
  const Corpus corpus = ingest_corpus(o.corpus);
  const auto subset = read_subset(o.subset);

  Corpus chosen;
  chosen.source_path = corpus.source_path;
  for (const TaskSession& s : corpus.sessions) {
    if (subset.count({s.user_id, s.task_id})) chosen.sessions.push_back(s);
  }
  if (chosen.sessions.size() != subset.size()) {
    throw ConfigError(fmt::format("subset names {} session(s) but only {} are in the corpus",
                                  subset.size(), chosen.sessions.size()));
  }
  const auto batches = make_session_batches(chosen, FeatureGroupMask::full());

  InductionOptions options;
  options.iterations = o.iterations;
  options.version = o.version;
  options.decoding = bc.decoding;
  if (!o.dataset.empty()) {
    const auto tag = parse_dataset_tag(o.dataset);
    if (!tag) throw ConfigError("unknown dataset tag '" + o.dataset + "'");
    options.dataset_tag = *tag;
  } else {
    options.dataset_tag = chosen.sessions.front().dataset_tag;
  }

  auto backend = make_backend(bc);
  Dispatcher dispatcher(*backend, bc.retry, bc.rate);
  const InductionResult result = induce_rubric(batches, dispatcher, options);
  save_rubric(result.rubric, o.out);

  json manifest{{"rubric", o.out},
                {"corpus", {{"path", corpus.source_path},
                            {"sha256", sha256_hex(serialize_corpus(corpus))}}},
                {"subset_file", o.subset},
                {"subset", json::array()},
                {"iterations", o.iterations},
                {"backend", {{"identity", backend->identity()},
                             {"descriptor", describe_backend(bc)},
                             {"temperature", bc.decoding.temperature},
                             {"top_p", bc.decoding.top_p}}},
                {"template_version", result.template_version},
                {"backend_calls", result.backend_calls},
                {"rounds", json::array()}};
  for (const auto& [user, task] : subset) manifest["subset"].push_back({user, task});
  for (std::size_t i = 0; i < result.reasoning.size(); ++i) {
    manifest["rounds"].push_back({{"reasoning", result.reasoning[i]}, {"rules", result.drafts[i]}});
  }
  write_text(o.out + ".manifest.json", manifest.dump(2) + "\n");
  out << fmt::format("rubric induced from {} session(s) in {} round(s), {} backend calls: {}\n",
                     batches.size(), o.iterations, result.backend_calls, o.out);
  return kExitOk;
}

struct SynthOptions {
  std::string out;
  std::uint64_t seed = 7;
  std::size_t sessions = 50;
  std::size_t users = 10;
  bool thuir = false;
  std::vector<std::size_t> label_counts;
  double relevance_coverage = 1.0;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SyntheticOptions s = o.thuir ? thuir_shape(o.seed) : SyntheticOptions{};
  if (!o.thuir) {
    s.seed = o.seed;
    s.sessions = o.sessions;
    s.users = o.users;
  }
  s.relevance_coverage = o.relevance_coverage;
  if (!o.label_counts.empty()) {
    if (o.label_counts.size() != 4) throw ConfigError("--label-counts takes four numbers (labels 0-3)");
    s.label_counts = std::array<std::size_t, 4>{o.label_counts[0], o.label_counts[1],
                                                o.label_counts[2], o.label_counts[3]};
  }
  const Corpus corpus = generate_corpus(s);
  write_corpus(corpus, o.out);
  out << fmt::format("{} sessions, {} queries, {} data points written to {}\n",
                     corpus.summary.sessions, corpus.summary.queries, corpus.summary.data_points, o.out);
  return kExitOk;
}

// Routes library logging to the caller's error stream for the duration of a command.
class LogScope {
 public:
  LogScope(std::ostream& err, spdlog::level::level_enum level)
      : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    sink->set_pattern("[%l] %v");
    auto logger = std::make_shared<spdlog::logger>("usejudge", sink);
    logger->set_level(level);
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Usefulness judgments for search sessions with LLM raters", "usejudge"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file; options go under a [judge], [ablate], ... section");
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  std::string ingest_path;
  bool ingest_json = false;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print its summary");
  ingest->add_option("corpus", ingest_path, "Session corpus (JSONL)")->required();
  ingest->add_flag("--json", ingest_json, "Print the summary as JSON");

  std::string batch_corpus, batch_scope = "SESSION", batch_mask = "RSU", batch_out;
  auto* batch = app.add_subcommand("batch", "Write judgment batches as JSONL");
  batch->add_option("corpus", batch_corpus, "Session corpus (JSONL)")->required();
  batch->add_option("--scope", batch_scope, "POINT | SESSION")->capture_default_str();
  batch->add_option("--mask", batch_mask, "Feature groups to keep")->capture_default_str();
  batch->add_option("--out", batch_out, "Output file (default: stdout)");

  RunOptions judge_options;
  auto* judge = app.add_subcommand("judge", "Judge every clicked document of a corpus");
  add_run_options(judge, judge_options);
  judge->add_option("--mask", judge_options.mask, "Feature groups to keep (R, S, U)")
      ->capture_default_str();

  EvalCliOptions evaluate_options;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a run against human labels");
  add_eval_options(evaluate_cmd, evaluate_options);

  EvalCliOptions report_options;
  auto* report = app.add_subcommand("report", "Write report tables and a label histogram plot");
  add_eval_options(report, report_options);

  RunOptions ablate_options;
  auto* ablate = app.add_subcommand("ablate", "Run all seven feature-group subsets");
  add_run_options(ablate, ablate_options);

  InduceOptions induce_options;
  auto* induce = app.add_subcommand("induce", "Induce a rubric from labeled sessions");
  induce->add_option("corpus,--corpus", induce_options.corpus, "Session corpus (JSONL)")->required();
  induce->add_option("--subset", induce_options.subset,
                     "File of 'user_id<TAB>task_id' lines naming the induction sessions")
      ->required();
  induce->add_option("--out", induce_options.out, "Rubric file to write")->required();
  induce->add_option("--iterations", induce_options.iterations)->capture_default_str();
  induce->add_option("--dataset", induce_options.dataset,
                     "THUIR_STYLE | QREF_STYLE | SYNTHETIC (default: from the corpus)");
  induce->add_option("--version", induce_options.version, "Version written into the rubric")
      ->capture_default_str();
  add_backend_options(induce, induce_options.backend);

  SynthOptions synth_options;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  synth->add_option("--out", synth_options.out, "Corpus file to write")->required();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();
  synth->add_option("--sessions", synth_options.sessions)->capture_default_str();
  synth->add_option("--users", synth_options.users)->capture_default_str();
  synth->add_flag("--thuir-shape", synth_options.thuir,
                  "447 sessions / 735 queries / 3,041 data points");
  synth->add_option("--label-counts", synth_options.label_counts,
                    "Exact human label counts for labels 0-3")
      ->expected(4);
  synth->add_option("--relevance-coverage", synth_options.relevance_coverage)
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  LogScope logging(err, verbose ? spdlog::level::debug
                                : quiet ? spdlog::level::err : spdlog::level::info);
  try {
    if (ingest->parsed()) return cmd_ingest(ingest_path, ingest_json, out);
    if (batch->parsed()) return cmd_batch(batch_corpus, batch_scope, batch_mask, batch_out, out);
    if (judge->parsed()) return cmd_judge(judge_options, judge, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_options, out);
    if (report->parsed()) return cmd_report(report_options, out);
    if (ablate->parsed()) return cmd_ablate(ablate_options, out);
    if (induce->parsed()) return cmd_induce(induce_options, out);
    if (synth->parsed()) return cmd_synth(synth_options, out);
  } catch (const StrictModeAbort& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailures;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailures;
  }
  return kExitConfig;
}

}  // namespace usejudge
