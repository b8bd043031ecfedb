#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "usejudge/batching.hpp"
#include "usejudge/cli.hpp"
#include "usejudge/rubric.hpp"
#include "usejudge/synthetic.hpp"

namespace {

using namespace usejudge;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = oracle::temp_dir("cli");
    corpus_ = (dir_ / "corpus.jsonl").string();
    const auto r = run({"synth", "--out", corpus_, "--sessions", "8", "--users", "3", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::filesystem::path dir_;
  std::string corpus_;
};

TEST_F(Cli, IngestSummary) {
  const auto r = run({"ingest", corpus_, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["sessions"], 8);
  EXPECT_EQ(j["users"], 3);
}

TEST_F(Cli, IngestRejectsBrokenCorpus) {
  const auto bad = dir_ / "bad.jsonl";
  std::ofstream(bad) << "{\"user_id\": \n";
  const auto r = run({"ingest", bad.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, BatchToStdout) {
  const auto r = run({"batch", corpus_, "--scope", "SESSION", "--mask", "RS"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
}

TEST_F(Cli, JudgeThenEvaluateEcho) {
  const std::string out = (dir_ / "run").string();
  auto r = run({"judge", corpus_, "--method", "TRUE_RUBRIC", "--rubric", "shipped:thuir", "--out", out,
                "--backend", "echo", "-q"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "config.ini"));
  r = run({"evaluate", out, "--binarize"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("OVERALL    1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PER_TASK   1.000000"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "metrics.kv"));
  r = run({"report", "--run", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "report" / "label_distribution.svg"));
}

TEST_F(Cli, ConfigReplayIsByteIdentical) {
  const auto out = dir_ / "run";
  auto r = run({"judge", corpus_, "--method", "SESSION_PERSONALIZED", "--out", out.string(),
                "--backend", "echo", "--max-inflight", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string records = slurp(out / "records.jsonl");
  r = run({"judge", "--config", (out / "config.ini").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("8 cache hits"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(out / "records.jsonl"), records);
}

TEST_F(Cli, TrueRubricWithoutRubricExits2) {
  const auto r = run({"judge", corpus_, "--method", "TRUE_RUBRIC", "--out", (dir_ / "x").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("rubric required"), std::string::npos);
}

TEST_F(Cli, UnknownOptionExits2) {
  EXPECT_EQ(run({"judge", corpus_, "--bogus"}).code, kExitConfig);
  EXPECT_EQ(run({}).code, kExitConfig);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, FailedBatchesExit1) {
  const auto script = dir_ / "fail.txt";
  std::ofstream(script) << "FAIL down\n";
  const auto r = run({"judge", corpus_, "--method", "SESSION_PERSONALIZED", "--out",
                      (dir_ / "f").string(), "--backend", "scripted:" + script.string(),
                      "--retries", "1", "-q"});
  EXPECT_EQ(r.code, kExitFailures);
  EXPECT_NE(r.out.find("failures.jsonl"), std::string::npos);
  const auto strict = run({"judge", corpus_, "--method", "SESSION_PERSONALIZED", "--out",
                           (dir_ / "s").string(), "--backend", "scripted:" + script.string(),
                           "--retries", "1", "--strict", "-q"});
  EXPECT_EQ(strict.code, kExitFailures);
  EXPECT_NE(strict.err.find("strict mode"), std::string::npos);
}

TEST_F(Cli, AblateWritesSevenRows) {
  const auto out = dir_ / "abl";
  const auto r = run({"ablate", corpus_, "--method", "SESSION_PERSONALIZED", "--out", out.string(),
                      "--backend", "echo", "-q"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string tsv = slurp(out / "ablation.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 8);
  for (const auto& mask : ablation_masks()) {
    EXPECT_NE(tsv.find(mask.code() + "\t1.000000"), std::string::npos) << mask.code();
  }
}

TEST_F(Cli, InduceWithScriptedBackend) {
  const Corpus corpus = ingest_corpus(corpus_);
  const auto subset = dir_ / "subset.tsv";
  {
    std::ofstream s(subset);
    s << "# user\ttask\n";
    s << corpus.sessions[0].user_id << '\t' << corpus.sessions[0].task_id << '\n';
    s << corpus.sessions[1].user_id << '\t' << corpus.sessions[1].task_id << '\n';
  }
  RubricDocument canned = shipped_rubric(DatasetTag::kQrefStyle);
  const auto script = dir_ / "induce.txt";
  std::ofstream(script) << "TEXT " << nlohmann::json(format_rubric(canned)).dump() << '\n';
  const auto out = dir_ / "induced.rubric";
  const auto r = run({"induce", corpus_, "--subset", subset.string(), "--out", out.string(),
                      "--iterations", "2", "--backend", "scripted:" + script.string(), "-q"});
  ASSERT_EQ(r.code, 0) << r.err;
  const RubricDocument induced = load_rubric(out);
  EXPECT_EQ(induced.provenance, RubricProvenance::kInduced);
  EXPECT_EQ(induced.rules, canned.rules);
  const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  EXPECT_EQ(manifest["backend_calls"], 4);
  EXPECT_EQ(manifest["subset"].size(), 2u);

  std::ofstream(subset, std::ios::app) << "nobody\tnothing\n";
  EXPECT_EQ(run({"induce", corpus_, "--subset", subset.string(), "--out", out.string(),
                 "--backend", "scripted:" + script.string(), "-q"})
                .code,
            kExitConfig);
}

}  // namespace
