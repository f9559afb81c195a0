#include <gtest/gtest.h>

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <iterator>
#include <cstdlib>
#include <set>
#include <thread>

#include "biaslab/lrp.hpp"
#include "biaslab/service.hpp"

namespace biaslab {
namespace {

// Small datasets and a short sweep.
ServiceConfig small_config() {
  ServiceConfig c;
  for (Scenario s : kAllScenarios) {
    c.scenario(s).train_size = 600;
    c.scenario(s).test_size = 400;
  }
  c.sweep.train_size = 2000;
  c.sweep.test_size = 1000;
  c.sweep.train.epochs = 60;
  return c;
}

const char* kApplicant =
    R"({"scenario": "covariate", "university": "University3",
        "skills": {"statistics": 0.8, "python": 0.2, "pytorch": 0.9, "matlab": 0.1}})";

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { shared = new Service(small_config()); }
  static void TearDownTestSuite() {
    delete shared;
    shared = nullptr;
  }
  static Service* shared;
};
Service* ServiceTest::shared = nullptr;

TEST_F(ServiceTest, ScenariosListedFresh) {
  Service svc(small_config());
  const ApiResponse r = svc.scenarios();
  EXPECT_EQ(r.status, 200);
  const json& list = r.body.at("scenarios");
  ASSERT_EQ(list.size(), 4u);
  std::set<std::string> names;
  for (const auto& s : list) {
    names.insert(s.at("name"));
    EXPECT_EQ(s.at("status"), "untrained");
  }
  EXPECT_EQ(names, (std::set<std::string>{"covariate", "selection", "imbalance", "unbiased"}));
}

TEST_F(ServiceTest, UntrainedEndpointsReturn409) {
  Service svc(small_config());
  EXPECT_EQ(svc.predict(kApplicant).status, 409);
  EXPECT_EQ(svc.relevance(kApplicant).status, 409);
  EXPECT_EQ(svc.brush(R"({"scenario": "covariate", "selection": "all"})").status, 409);
}

TEST_F(ServiceTest, TrainingFlipsStatus) {
  Service svc(small_config());
  const ApiResponse t = svc.train(R"({"scenario": "covariate"})");
  ASSERT_EQ(t.status, 200) << t.body.dump();
  for (const auto& s : svc.scenarios().body.at("scenarios")) {
    EXPECT_EQ(s.at("status"), s.at("name") == "covariate" ? "trained" : "untrained");
  }
  EXPECT_EQ(svc.train(R"({"scenario": "nope"})").status, 404);
  EXPECT_EQ(svc.train("not json").status, 400);
}

TEST_F(ServiceTest, DatasetPaging) {
  Service& svc = *shared;
  const ApiResponse first = svc.dataset("selection", "train", "0", "10");
  ASSERT_EQ(first.status, 200);
  const json full = dataset_to_json(svc.data(Scenario::kSelection, SplitTag::kTrain));
  ASSERT_EQ(first.body.at("examples").size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(first.body["examples"][i], full["examples"][i]);
  const ApiResponse second = svc.dataset("selection", "train", "10", "10");
  EXPECT_EQ(second.body["examples"][0], full["examples"][10]);
  EXPECT_EQ(first.body.at("total"), 600);

  const ApiResponse past = svc.dataset("selection", "train", "600", "10");
  EXPECT_EQ(past.status, 200);
  EXPECT_TRUE(past.body.at("examples").empty());
  EXPECT_EQ(svc.dataset("selection", "test", std::nullopt, std::nullopt).body.at("examples").size(), 400u);
}

TEST_F(ServiceTest, DatasetErrors) {
  Service& svc = *shared;
  EXPECT_EQ(svc.dataset("mystery", "train", std::nullopt, std::nullopt).status, 404);
  EXPECT_EQ(svc.dataset("covariate", "validation", std::nullopt, std::nullopt).status, 404);
  EXPECT_EQ(svc.dataset("covariate", "train", "0", "10001").status, 400);
  EXPECT_EQ(svc.dataset("covariate", "train", "0", "5001").status, 400);
  EXPECT_EQ(svc.dataset("covariate", "train", "0", "5000").status, 200);
  EXPECT_EQ(svc.dataset("covariate", "train", "0", "0").status, 400);
  EXPECT_EQ(svc.dataset("covariate", "train", "-1", "10").status, 400);
  EXPECT_EQ(svc.dataset("covariate", "train", "abc", "10").status, 400);
}

TEST_F(ServiceTest, IdempotentReads) {
  Service& svc = *shared;
  EXPECT_EQ(svc.dataset("unbiased", "test", "5", "50").body.dump(),
            svc.dataset("unbiased", "test", "5", "50").body.dump());
  EXPECT_EQ(svc.scenarios().body.dump(), svc.scenarios().body.dump());
}

class TrainedServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    svc = new Service(small_config());
    svc->train_scenario(Scenario::kCovariate);
    svc->train_scenario(Scenario::kSelection);
  }
  static void TearDownTestSuite() {
    delete svc;
    svc = nullptr;
  }
  static Service* svc;
};
Service* TrainedServiceTest::svc = nullptr;

TEST_F(TrainedServiceTest, PredictEqualsForward) {
  const ApiResponse r = svc->predict(kApplicant);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const Applicant a{{0.8, 0.2, 0.9, 0.1}, University(2)};
  const ForwardTrace t = forward(svc->model(Scenario::kCovariate)->params, encode(a));
  EXPECT_EQ(r.body.at("probability").get<double>(), t.probability);
  EXPECT_EQ(r.body.at("logit").get<double>(), t.logit);
}

TEST_F(TrainedServiceTest, PredictValidation) {
  EXPECT_EQ(svc->predict(R"({"scenario": "covariate", "university": "University3",
      "skills": {"statistics": 1.2, "python": 0.2, "pytorch": 0.9, "matlab": 0.1}})").status, 422);
  EXPECT_EQ(svc->predict(R"({"scenario": "covariate", "university": "University11",
      "skills": {"statistics": 0.2, "python": 0.2, "pytorch": 0.9, "matlab": 0.1}})").status, 422);
  EXPECT_EQ(svc->predict(R"({"scenario": "covariate", "university": "University1",
      "skills": {"statistics": 0.2}})").status, 422);
  EXPECT_EQ(svc->predict(R"({"scenario": "martian", "university": "University1",
      "skills": {"statistics": 0.2, "python": 0.2, "pytorch": 0.9, "matlab": 0.1}})").status, 404);
  EXPECT_EQ(svc->predict("[1, 2]").status, 400);
}

TEST_F(TrainedServiceTest, RelevanceEqualsExplain) {
  const ApiResponse r = svc->relevance(kApplicant);
  ASSERT_EQ(r.status, 200);
  const Applicant a{{0.8, 0.2, 0.9, 0.1}, University(2)};
  const json direct = relevance_to_json(explain(svc->model(Scenario::kCovariate)->params, a));
  EXPECT_EQ(r.body.dump(), direct.dump());
  double total = 0.0;
  for (const char* k : {"statistics", "python", "pytorch", "matlab", "university"}) {
    total += r.body.at("relative").at(k).get<double>();
  }
  EXPECT_NEAR(total, 100.0, 1e-6);
}

TEST_F(TrainedServiceTest, BrushAllAndConjunction) {
  const ApiResponse all = svc->brush(R"({"scenario": "selection", "split": "test", "selection": "all"})");
  ASSERT_EQ(all.status, 200);
  EXPECT_EQ(all.body.at("count"), 400);
  auto ids = [](const json& body) {
    std::set<std::size_t> out;
    for (const auto& row : body.at("rows")) out.insert(row.at("index").get<std::size_t>());
    return out;
  };
  const auto a = svc->brush(R"({"scenario": "selection", "selection": {"skills": {"python": [0.7, 1]}}})");
  const auto b = svc->brush(R"({"scenario": "selection", "selection": {"skills": {"pytorch": [0.7, 1]}, "universities": ["University10", "University2"]}})");
  const auto ab = svc->brush(R"({"scenario": "selection", "selection": {"skills": {"python": [0.7, 1], "pytorch": [0.7, 1]}, "universities": ["University10", "University2"]}})");
  ASSERT_EQ(ab.status, 200);
  std::set<std::size_t> expected;
  const auto ia = ids(a.body), ib = ids(b.body);
  std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::inserter(expected, expected.begin()));
  EXPECT_EQ(ids(ab.body), expected);
  EXPECT_FALSE(expected.empty());

  const auto direct = brush_to_json(
      biaslab::brush(svc->data(Scenario::kSelection, SplitTag::kTest),
                     svc->model(Scenario::kSelection)->params,
                     brush_selection_from_json(json::parse(R"({"skills": {"python": [0.7, 1]}})"))),
      5000);
  EXPECT_EQ(a.body.dump(), direct.dump());
}

TEST_F(TrainedServiceTest, BrushMalformedRange) {
  EXPECT_EQ(svc->brush(R"({"scenario": "selection", "selection": {"skills": {"python": [0.9, 0.1]}}})").status, 400);
  EXPECT_EQ(svc->brush(R"({"scenario": "selection", "selection": {"skills": {"python": "high"}}})").status, 400);
  EXPECT_EQ(svc->brush(R"({"scenario": "selection", "split": "dev"})").status, 404);
}

TEST(ImbalanceJobs, LifecycleAndFacadeTransparency) {
  const ServiceConfig cfg = small_config();
  Service svc(cfg);
  EXPECT_EQ(svc.start_imbalance(R"({"train_ratio": 0})").status, 422);
  EXPECT_EQ(svc.start_imbalance(R"({"train_ratio": 1})").status, 422);
  EXPECT_EQ(svc.start_imbalance(R"({"train_ratio": "half"})").status, 422);
  EXPECT_EQ(svc.imbalance_status("42").status, 404);

  const ApiResponse started = svc.start_imbalance(R"({"train_ratio": 0.5})");
  ASSERT_EQ(started.status, 202);
  const std::string id = started.body.at("job_id");
  EXPECT_EQ(svc.start_imbalance(R"({"train_ratio": 0.3})").status, 409);
  EXPECT_EQ(svc.train(R"({"scenario": "covariate"})").status, 409);
  svc.wait_for_job(id);

  const ApiResponse done = svc.imbalance_status(id);
  ASSERT_EQ(done.status, 200);
  ASSERT_EQ(done.body.at("status"), "done");
  const PieQuadruple direct = imbalance_sweep(0.5, cfg.sweep);
  EXPECT_EQ(done.body.at("result").dump(), pie_to_json(direct).dump());
  EXPECT_EQ(svc.imbalance_status(id).body.dump(), done.body.dump());

  const ApiResponse again = svc.start_imbalance(R"({"train_ratio": 0.5})");
  EXPECT_EQ(again.status, 202);
  EXPECT_NE(again.body.at("job_id"), id);
  svc.wait_for_job(again.body.at("job_id"));
  EXPECT_EQ(svc.imbalance_status(id).body.dump(), done.body.dump());
}

TEST(Environment, OverridesConfig) {
  setenv("BIASLAB_PORT", "9123", 1);
  setenv("BIASLAB_TRAIN_SIZE", "321", 1);
  setenv("BIASLAB_SELECTION_TRAIN_SEED", "77", 1);
  ServiceConfig c;
  apply_environment(c);
  EXPECT_EQ(c.port, 9123);
  EXPECT_EQ(c.scenario(Scenario::kCovariate).train_size, 321u);
  EXPECT_EQ(c.scenario(Scenario::kSelection).train_seed, 77u);
  EXPECT_EQ(c.scenario(Scenario::kCovariate).train_seed, default_scenario_config(Scenario::kCovariate).train_seed);
  setenv("BIASLAB_PORT", "eighty", 1);
  EXPECT_THROW(apply_environment(c), std::invalid_argument);
  unsetenv("BIASLAB_PORT");
  unsetenv("BIASLAB_TRAIN_SIZE");
  unsetenv("BIASLAB_SELECTION_TRAIN_SEED");
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    svc = std::make_unique<Service>(small_config());
    port = svc->bind_any_port();
    ASSERT_GT(port, 0);
    server = std::thread([this] { svc->run_bound(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 100 && !client->Get("/api/scenarios"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    svc->stop();
    server.join();
  }
  std::unique_ptr<Service> svc;
  int port = 0;
  std::thread server;
  std::unique_ptr<httplib::Client> client;
};

TEST_F(HttpTest, ScenariosAreJsonRegardlessOfAccept) {
  const auto res = client->Get("/api/scenarios", {{"Accept", "text/html"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(json::parse(res->body).at("scenarios").size(), 4u);
}

TEST_F(HttpTest, DatasetStatusCodes) {
  auto status = [this](const std::string& path) { return client->Get(path)->status; };
  EXPECT_EQ(status("/api/dataset?scenario=covariate&split=train&offset=0&limit=10"), 200);
  EXPECT_EQ(status("/api/dataset?scenario=nowhere&split=train"), 404);
  EXPECT_EQ(status("/api/dataset?scenario=covariate&split=train&limit=10001"), 400);
  const auto res = client->Get("/api/dataset?scenario=covariate&split=test&offset=3&limit=2");
  const json body = json::parse(res->body);
  EXPECT_EQ(body.at("examples").size(), 2u);
  EXPECT_EQ(body.at("offset"), 3);
}

TEST_F(HttpTest, PredictBeforeAndAfterTraining) {
  auto post = [this](const std::string& path, const std::string& body) {
    return client->Post(path, body, "application/json");
  };
  EXPECT_EQ(post("/api/predict", kApplicant)->status, 409);
  EXPECT_EQ(post("/api/train", R"({"scenario": "covariate"})")->status, 200);
  const auto res = post("/api/predict", kApplicant);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body), svc->predict(kApplicant).body);
  EXPECT_EQ(post("/api/relevance", kApplicant)->body, svc->relevance(kApplicant).body.dump());
  EXPECT_EQ(post("/api/brush", R"({"scenario": "covariate", "selection": {"skills": {"python": [1, 0]}}})")->status, 400);
}

TEST_F(HttpTest, ImbalanceJobOverHttp) {
  const auto started = client->Post("/api/experiments/imbalance", R"({"train_ratio": 0.5})", "application/json");
  ASSERT_EQ(started->status, 202);
  const std::string id = json::parse(started->body).at("job_id");
  svc->wait_for_job(id);
  const auto polled = client->Get("/api/experiments/imbalance/" + id);
  ASSERT_EQ(polled->status, 200);
  EXPECT_EQ(json::parse(polled->body).at("status"), "done");
  EXPECT_EQ(client->Get("/api/experiments/imbalance/999")->status, 404);
  EXPECT_EQ(client->Post("/api/experiments/imbalance", R"({"train_ratio": 0})", "application/json")->status, 422);
}

}  // namespace
}  // namespace biaslab
