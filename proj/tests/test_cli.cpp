#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "biaslab/cli.hpp"
#include "biaslab/io.hpp"
#include "biaslab/service.hpp"

namespace biaslab {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage = {"biaslab"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("biaslab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST_F(CliTest, GenerateIsByteIdentical) {
  ASSERT_EQ(run({"generate", "--bias", "none", "--n", "100", "--seed", "7", "-o", path("a.json")}).code, 0);
  ASSERT_EQ(run({"generate", "--bias", "none", "--n", "100", "--seed", "7", "-o", path("b.json")}).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const Dataset d = dataset_from_json(read_document(path("a.json")));
  EXPECT_EQ(d, generate(100, 7, NoBias{}));
}

TEST_F(CliTest, GenerateEachBias) {
  ASSERT_EQ(run({"generate", "--bias", "covariate", "--feature", "matlab", "--cap", "0.4", "--n", "50", "-o", path("c.json")}).code, 0);
  EXPECT_EQ(dataset_from_json(read_document(path("c.json"))).bias, BiasSpec(CovariateShift{Skill::kMatlab, 0.4}));
  ASSERT_EQ(run({"generate", "--bias", "imbalance", "--ratio", "0.2", "--n", "50", "--split", "test", "-o", path("i.json")}).code, 0);
  const Dataset imb = dataset_from_json(read_document(path("i.json")));
  EXPECT_DOUBLE_EQ(imb.invite_fraction(), 0.2);
  EXPECT_EQ(imb.split, SplitTag::kTest);
  const Result stdout_doc = run({"generate", "--bias", "selection", "--n", "5"});
  ASSERT_EQ(stdout_doc.code, 0);
  EXPECT_EQ(json::parse(stdout_doc.out).at("bias").at("kind"), "selection");
}

TEST_F(CliTest, TrainThenExplainSharesSumTo100) {
  ASSERT_EQ(run({"generate", "--n", "300", "--seed", "1", "-o", path("d.json")}).code, 0);
  const Result t = run({"train", "--data", path("d.json"), "--seed", "7", "--epochs", "20", "-o", path("m.json")});
  ASSERT_EQ(t.code, 0) << t.err;
  const Result e = run({"explain", "--model", path("m.json"), "--skills", "0.8,0.9,0.1,0.2",
                        "--university", "University10"});
  ASSERT_EQ(e.code, 0) << e.err;
  const json r = json::parse(e.out);
  double total = 0.0;
  for (const char* k : {"statistics", "python", "pytorch", "matlab", "university"}) total += r["relative"][k].get<double>();
  EXPECT_NEAR(total, 100.0, 1e-6);
}

TEST_F(CliTest, TrainIsDeterministicAndRereadable) {
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "2", "-o", path("d.json")}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "3", "--split", "test", "-o", path("t.json")}).code, 0);
  for (const char* name : {"m1.json", "m2.json"}) {
    ASSERT_EQ(run({"train", "--data", path("d.json"), "--test", path("t.json"), "--epochs", "10", "-o", path(name)}).code, 0);
  }
  EXPECT_EQ(slurp(path("m1.json")), slurp(path("m2.json")));
  const Result ev = run({"evaluate", "--model", path("m1.json"), "--data", path("t.json")});
  ASSERT_EQ(ev.code, 0);
  const TrainedModel m = model_from_json(read_document(path("m1.json")));
  EXPECT_EQ(json::parse(ev.out).at("accuracy").get<double>(), *m.report.held_out_accuracy);
}

TEST_F(CliTest, AnalyzeSubcommands) {
  ASSERT_EQ(run({"generate", "--bias", "covariate", "--n", "500", "-o", path("tr.json")}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "500", "--seed", "9", "-o", path("te.json")}).code, 0);
  const Result cov = run({"analyze", "coverage", "--data", path("tr.json"), "--test", path("te.json")});
  ASSERT_EQ(cov.code, 0);
  EXPECT_TRUE(json::parse(cov.out).at("skills").at("pytorch").at("shift_warning").get<bool>());
  const Result assoc = run({"analyze", "association", "--data", path("te.json")});
  ASSERT_EQ(assoc.code, 0);
  EXPECT_EQ(json::parse(assoc.out).at("universities").size(), 10u);
  ASSERT_EQ(run({"train", "--data", path("tr.json"), "--epochs", "5", "-o", path("m.json")}).code, 0);
  const Result br = run({"analyze", "brush", "--model", path("m.json"), "--data", path("te.json"),
                         "--selection", R"({"skills": {"pytorch": [0.7, 1]}})"});
  ASSERT_EQ(br.code, 0) << br.err;
  const json b = json::parse(br.out);
  for (const auto& row : b.at("rows")) EXPECT_GE(row.at("skills").at("pytorch").get<double>(), 0.7);
  EXPECT_EQ(b.at("count").get<std::size_t>(), b.at("rows").size());
}

TEST_F(CliTest, SweepEqualsAnalysis) {
  const Result r = run({"sweep-imbalance", "--ratio", "0.5", "--n", "1000", "--test-n", "800",
                        "--epochs", "20", "-o", path("pie.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("predicted invite ratio"), std::string::npos);
  SweepConfig cfg;
  cfg.train_size = 1000;
  cfg.test_size = 800;
  cfg.train.epochs = 20;
  EXPECT_EQ(pie_from_json(read_document(path("pie.json"))), imbalance_sweep(0.5, cfg));
}

TEST_F(CliTest, ExplainMatchesServicePredictBitForBit) {
  ServiceConfig cfg;
  for (Scenario s : kAllScenarios) {
    cfg.scenario(s).train_size = 300;
    cfg.scenario(s).test_size = 100;
  }
  Service svc(cfg);
  svc.train_scenario(Scenario::kUnbiased);
  write_document(path("m.json"), model_to_json(*svc.model(Scenario::kUnbiased)));
  const Result e = run({"explain", "--model", path("m.json"), "--skills", "0.8,0.25,0.71,0.1",
                        "--university", "University4"});
  ASSERT_EQ(e.code, 0);
  const ApiResponse p = svc.predict(R"({"scenario": "unbiased", "university": "University4",
      "skills": {"statistics": 0.8, "python": 0.25, "pytorch": 0.71, "matlab": 0.1}})");
  const json cli = json::parse(e.out);
  EXPECT_EQ(cli.at("probability").dump(), p.body.at("probability").dump());
  EXPECT_EQ(cli.at("logit").dump(), p.body.at("logit").dump());
  EXPECT_EQ(json::parse(e.out), svc.relevance(R"({"scenario": "unbiased", "university": "University4",
      "skills": {"statistics": 0.8, "python": 0.25, "pytorch": 0.71, "matlab": 0.1}})").body);
}

TEST_F(CliTest, ErrorsHaveDistinctMessages) {
  const Result unknown_flag = run({"generate", "--colour", "blue"});
  const Result missing = run({"evaluate", "--model", path("nope.json"), "--data", path("nope.json")});
  std::ofstream(path("v9.json")) << R"({"schema_version": 9})";
  const Result mismatch = run({"evaluate", "--model", path("v9.json"), "--data", path("v9.json")});
  EXPECT_NE(unknown_flag.code, 0);
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(mismatch.code, 0);
  EXPECT_NE(unknown_flag.err.find("--colour"), std::string::npos) << unknown_flag.err;
  EXPECT_NE(missing.err.find("cannot open input file"), std::string::npos) << missing.err;
  EXPECT_NE(mismatch.err.find("schema version mismatch"), std::string::npos) << mismatch.err;
  EXPECT_NE(unknown_flag.err, missing.err);
  EXPECT_NE(missing.err, mismatch.err);
}

TEST_F(CliTest, DomainValidation) {
  EXPECT_NE(run({"generate", "--n", "0"}).code, 0);
  EXPECT_NE(run({"generate", "--cap", "2"}).code, 0);
  EXPECT_NE(run({"generate", "--bias", "weird"}).code, 0);
  const Result tiny = run({"generate", "--bias", "imbalance", "--ratio", "0.1", "--n", "5"});
  EXPECT_EQ(tiny.code, 1);
  EXPECT_NE(tiny.err.find("n*ratio"), std::string::npos);
  ASSERT_EQ(run({"generate", "--n", "50", "-o", path("d.json")}).code, 0);
  ASSERT_EQ(run({"train", "--data", path("d.json"), "--epochs", "1", "-o", path("m.json")}).code, 0);
  EXPECT_NE(run({"explain", "--model", path("m.json"), "--skills", "0.1,0.2,0.3", "--university", "University1"}).code, 0);
  EXPECT_NE(run({"explain", "--model", path("m.json"), "--skills", "0.1,0.2,0.3,1.4", "--university", "University1"}).code, 0);
  EXPECT_NE(run({"explain", "--model", path("m.json"), "--skills", "0.1,0.2,0.3,0.4", "--university", "MIT"}).code, 0);
  EXPECT_NE(run({}).code, 0);
}

}  // namespace
}  // namespace biaslab
