#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "biaslab/analysis.hpp"
#include "biaslab/io.hpp"
#include "biaslab/scenario.hpp"

namespace httplib {
class Server;
}

namespace biaslab {

struct ServiceConfig {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;  // UI bundle; not mounted when empty
  std::array<ScenarioConfig, kAllScenarios.size()> scenarios = {
      default_scenario_config(Scenario::kCovariate), default_scenario_config(Scenario::kSelection),
      default_scenario_config(Scenario::kImbalance), default_scenario_config(Scenario::kUnbiased)};
  SweepConfig sweep;
  bool pretrain = false;

  ScenarioConfig& scenario(Scenario s) { return scenarios[static_cast<std::size_t>(s)]; }
  const ScenarioConfig& scenario(Scenario s) const {
    return scenarios[static_cast<std::size_t>(s)];
  }
};

// Overrides fields from BIASLAB_PORT, BIASLAB_STATIC_DIR, BIASLAB_TRAIN_SIZE,
// BIASLAB_TEST_SIZE and BIASLAB_<SCENARIO>_{TRAIN,TEST,MODEL}_SEED.
void apply_environment(ServiceConfig& config);

// Status code plus JSON payload.
struct ApiResponse {
  int status = 200;
  json body;
};

enum class JobState { kPending, kDone, kFailed };

struct Job {
  JobState state = JobState::kPending;
  double train_ratio = 0.0;
  std::optional<PieQuadruple> result;
  std::string error;
};

// Session state and request handling for the UI API. Handlers are callable
// directly (tests) or through an httplib::Server (mount / run).
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse scenarios() const;
  ApiResponse dataset(const std::string& scenario, const std::string& split,
                      const std::optional<std::string>& offset,
                      const std::optional<std::string>& limit) const;
  ApiResponse predict(const std::string& body) const;
  ApiResponse relevance(const std::string& body) const;
  ApiResponse brush(const std::string& body) const;
  // Trains a scenario's model synchronously. 409 while another job runs.
  ApiResponse train(const std::string& body);
  ApiResponse start_imbalance(const std::string& body);
  ApiResponse imbalance_status(const std::string& id) const;

  // Blocks until the job leaves the pending state (for tests and the CLI).
  void wait_for_job(const std::string& id) const;

  const Dataset& data(Scenario s, SplitTag split) const;
  std::shared_ptr<const TrainedModel> model(Scenario s) const;
  void train_scenario(Scenario s);

  void mount(httplib::Server& server);
  // Binds and serves until stop(). Returns false if the port cannot be bound.
  bool run();
  // Binds an ephemeral port and returns it; serve with run_bound().
  int bind_any_port();
  void run_bound();
  void stop();

 private:
  struct ScenarioData {
    Dataset train;
    Dataset test;
  };

  bool try_acquire_job_slot();
  void release_job_slot();

  ServiceConfig config_;
  std::array<ScenarioData, kAllScenarios.size()> data_;

  mutable std::shared_mutex models_mutex_;
  std::array<std::shared_ptr<const TrainedModel>, kAllScenarios.size()> models_;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_cv_;
  std::map<std::string, Job> jobs_;
  std::uint64_t next_job_id_ = 1;
  bool busy_ = false;
  std::thread worker_;

  std::unique_ptr<httplib::Server> server_;
};

}  // namespace biaslab
