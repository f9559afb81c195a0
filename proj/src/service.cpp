#include "biaslab/service.hpp"

#include <charconv>
#include <cstdlib>
#include <variant>

#include <httplib.h>

#include "biaslab/lrp.hpp"

namespace biaslab {

namespace {

constexpr std::size_t kMaxPageLimit = 5000;
constexpr std::size_t kMaxBrushRows = 5000;

ApiResponse error(int status, const std::string& message) {
  return {status, json{{"error", message}, {"status", status}}};
}

std::optional<json> parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::optional<Scenario> lookup_scenario(const json& j) {
  if (!j.contains("scenario") || !j.at("scenario").is_string()) return std::nullopt;
  try {
    return parse_scenario(j.at("scenario").get<std::string>());
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::optional<std::size_t> parse_count(const std::string& text) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::string_view job_state_name(JobState s) {
  switch (s) {
    case JobState::kPending: return "pending";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "failed";
}

template <typename T>
void env_override(const char* name, T& field) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return;
  const std::string text(raw);
  if constexpr (std::is_same_v<T, std::string>) {
    field = text;
  } else {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw std::invalid_argument(std::string("environment variable ") + name +
                                  " is not a valid number");
    }
    field = value;
  }
}

}  // namespace

void apply_environment(ServiceConfig& config) {
  env_override("BIASLAB_PORT", config.port);
  env_override("BIASLAB_STATIC_DIR", config.static_dir);
  std::optional<std::size_t> train_size;
  std::optional<std::size_t> test_size;
  std::size_t value = 0;
  if (std::getenv("BIASLAB_TRAIN_SIZE") != nullptr) {
    env_override("BIASLAB_TRAIN_SIZE", value);
    train_size = value;
  }
  if (std::getenv("BIASLAB_TEST_SIZE") != nullptr) {
    env_override("BIASLAB_TEST_SIZE", value);
    test_size = value;
  }
  for (const Scenario s : kAllScenarios) {
    ScenarioConfig& c = config.scenario(s);
    if (train_size) c.train_size = *train_size;
    if (test_size) c.test_size = *test_size;
    std::string prefix = "BIASLAB_" + std::string(scenario_name(s)) + "_";
    for (char& ch : prefix) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    env_override((prefix + "TRAIN_SEED").c_str(), c.train_seed);
    env_override((prefix + "TEST_SEED").c_str(), c.test_seed);
    env_override((prefix + "MODEL_SEED").c_str(), c.model_seed);
  }
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  for (const Scenario s : kAllScenarios) {
    const ScenarioConfig& c = config_.scenario(s);
    data_[static_cast<std::size_t>(s)] = {scenario_dataset(s, SplitTag::kTrain, c),
                                          scenario_dataset(s, SplitTag::kTest, c)};
  }
  if (config_.pretrain) {
    for (const Scenario s : kAllScenarios) train_scenario(s);
  }
}

Service::~Service() {
  stop();
  if (worker_.joinable()) worker_.join();
}

const Dataset& Service::data(Scenario s, SplitTag split) const {
  const ScenarioData& d = data_[static_cast<std::size_t>(s)];
  return split == SplitTag::kTrain ? d.train : d.test;
}

std::shared_ptr<const TrainedModel> Service::model(Scenario s) const {
  std::shared_lock lock(models_mutex_);
  return models_[static_cast<std::size_t>(s)];
}

void Service::train_scenario(Scenario s) {
  const ScenarioConfig& c = config_.scenario(s);
  auto trained = std::make_shared<const TrainedModel>(
      biaslab::train(data(s, SplitTag::kTrain), scenario_train_config(c), &data(s, SplitTag::kTest)));
  std::unique_lock lock(models_mutex_);
  models_[static_cast<std::size_t>(s)] = std::move(trained);
}

bool Service::try_acquire_job_slot() {
  std::lock_guard lock(jobs_mutex_);
  if (busy_) return false;
  busy_ = true;
  return true;
}

void Service::release_job_slot() {
  {
    std::lock_guard lock(jobs_mutex_);
    busy_ = false;
  }
  jobs_cv_.notify_all();
}

ApiResponse Service::scenarios() const {
  json list = json::array();
  for (const Scenario s : kAllScenarios) {
    const auto m = model(s);
    json entry{{"name", scenario_name(s)},
               {"train_size", data(s, SplitTag::kTrain).size()},
               {"test_size", data(s, SplitTag::kTest).size()},
               {"train_bias", bias_to_json(train_bias(s))},
               {"test_bias", bias_to_json(test_bias(s))},
               {"status", m ? "trained" : "untrained"}};
    if (m && m->report.held_out_accuracy) entry["held_out_accuracy"] = *m->report.held_out_accuracy;
    list.push_back(std::move(entry));
  }
  return {200, json{{"schema_version", kSchemaVersion}, {"scenarios", list}}};
}

ApiResponse Service::dataset(const std::string& scenario, const std::string& split,
                             const std::optional<std::string>& offset,
                             const std::optional<std::string>& limit) const {
  Scenario s;
  SplitTag tag;
  try {
    s = parse_scenario(scenario);
  } catch (const std::invalid_argument& e) {
    return error(404, e.what());
  }
  try {
    tag = parse_split(split);
  } catch (const std::invalid_argument& e) {
    return error(404, e.what());
  }
  std::size_t first = 0;
  std::size_t count = kMaxPageLimit;
  if (offset) {
    const auto v = parse_count(*offset);
    if (!v) return error(400, "offset must be a nonnegative integer");
    first = *v;
  }
  if (limit) {
    const auto v = parse_count(*limit);
    if (!v || *v == 0 || *v > kMaxPageLimit) {
      return error(400, "limit must be an integer in [1, " + std::to_string(kMaxPageLimit) + "]");
    }
    count = *v;
  }
  return {200, dataset_page_to_json(data(s, tag), first, count)};
}

namespace {

// Shared request parsing for /api/predict and /api/relevance.
std::variant<ApiResponse, std::pair<Scenario, Applicant>> parse_applicant_request(
    const std::string& body) {
  const auto j = parse_body(body);
  if (!j) return error(400, "request body must be a JSON object");
  if (!j->contains("scenario")) return error(400, "missing 'scenario'");
  const auto s = lookup_scenario(*j);
  if (!s) return error(404, "unknown scenario");
  try {
    return std::pair{*s, applicant_from_json(*j)};
  } catch (const FormatError& e) {
    return error(422, e.what());
  }
}

}  // namespace

ApiResponse Service::predict(const std::string& body) const {
  auto parsed = parse_applicant_request(body);
  if (auto* err = std::get_if<ApiResponse>(&parsed)) return *err;
  const auto& [s, applicant] = std::get<std::pair<Scenario, Applicant>>(parsed);
  const auto m = model(s);
  if (!m) return error(409, "scenario '" + std::string(scenario_name(s)) + "' is not trained");
  const FeatureVector x = encode(applicant);
  const ForwardTrace trace = forward(m->params, x);
  return {200, json{{"schema_version", kSchemaVersion},
                    {"probability", trace.probability},
                    {"logit", trace.logit}}};
}

ApiResponse Service::relevance(const std::string& body) const {
  auto parsed = parse_applicant_request(body);
  if (auto* err = std::get_if<ApiResponse>(&parsed)) return *err;
  const auto& [s, applicant] = std::get<std::pair<Scenario, Applicant>>(parsed);
  const auto m = model(s);
  if (!m) return error(409, "scenario '" + std::string(scenario_name(s)) + "' is not trained");
  try {
    return {200, relevance_to_json(explain(m->params, applicant))};
  } catch (const std::domain_error& e) {
    return error(500, e.what());
  }
}

ApiResponse Service::brush(const std::string& body) const {
  const auto j = parse_body(body);
  if (!j) return error(400, "request body must be a JSON object");
  const auto s = lookup_scenario(*j);
  if (!s) return error(404, "unknown scenario");
  SplitTag tag = SplitTag::kTest;
  try {
    if (j->contains("split")) tag = parse_split(j->at("split").get<std::string>());
  } catch (const std::exception& e) {
    return error(404, e.what());
  }
  BrushSelection selection;
  try {
    selection = brush_selection_from_json(j->contains("selection") ? j->at("selection") : json());
  } catch (const FormatError& e) {
    return error(400, e.what());
  }
  const auto m = model(*s);
  if (!m) return error(409, "scenario '" + std::string(scenario_name(*s)) + "' is not trained");
  return {200, brush_to_json(biaslab::brush(data(*s, tag), m->params, selection), kMaxBrushRows)};
}

ApiResponse Service::train(const std::string& body) {
  const auto j = parse_body(body);
  if (!j) return error(400, "request body must be a JSON object");
  const auto s = lookup_scenario(*j);
  if (!s) return error(404, "unknown scenario");
  if (!try_acquire_job_slot()) return error(409, "another training job is running");
  try {
    train_scenario(*s);
  } catch (const std::exception& e) {
    release_job_slot();
    return error(500, e.what());
  }
  release_job_slot();
  const auto m = model(*s);
  return {200, json{{"schema_version", kSchemaVersion},
                    {"scenario", scenario_name(*s)},
                    {"status", "trained"},
                    {"train_accuracy", m->report.train_accuracy},
                    {"held_out_accuracy", m->report.held_out_accuracy
                                              ? json(*m->report.held_out_accuracy)
                                              : json(nullptr)}}};
}

ApiResponse Service::start_imbalance(const std::string& body) {
  const auto j = parse_body(body);
  if (!j) return error(400, "request body must be a JSON object");
  if (!j->contains("train_ratio") || !j->at("train_ratio").is_number()) {
    return error(422, "train_ratio must be a number in (0, 1)");
  }
  const double ratio = j->at("train_ratio").get<double>();
  if (!(ratio > 0.0 && ratio < 1.0)) return error(422, "train_ratio must lie in (0, 1)");
  if (!try_acquire_job_slot()) return error(409, "an experiment job is already running");

  std::string id;
  {
    std::lock_guard lock(jobs_mutex_);
    id = std::to_string(next_job_id_++);
    Job job;
    job.train_ratio = ratio;
    jobs_.emplace(id, job);
  }
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this, id, ratio] {
    Job finished;
    finished.train_ratio = ratio;
    try {
      finished.result = imbalance_sweep(ratio, config_.sweep);
      finished.state = JobState::kDone;
    } catch (const std::exception& e) {
      finished.state = JobState::kFailed;
      finished.error = e.what();
    }
    {
      std::lock_guard lock(jobs_mutex_);
      jobs_[id] = std::move(finished);
      busy_ = false;
    }
    jobs_cv_.notify_all();
  });
  return {202, json{{"job_id", id}, {"status", "pending"}}};
}

ApiResponse Service::imbalance_status(const std::string& id) const {
  std::lock_guard lock(jobs_mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return error(404, "unknown job '" + id + "'");
  const Job& job = it->second;
  json body{{"job_id", id}, {"status", job_state_name(job.state)}, {"train_ratio", job.train_ratio}};
  if (job.state == JobState::kDone) body["result"] = pie_to_json(*job.result);
  if (job.state == JobState::kFailed) body["error"] = job.error;
  return {200, body};
}

void Service::wait_for_job(const std::string& id) const {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [&] {
    const auto it = jobs_.find(id);
    return it == jobs_.end() || it->second.state != JobState::kPending;
  });
}

void Service::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  auto query = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  server.Get("/api/scenarios", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, scenarios());
  });
  server.Get("/api/dataset", [this, reply, query](const httplib::Request& req, httplib::Response& res) {
    reply(res, dataset(query(req, "scenario").value_or(""), query(req, "split").value_or("train"),
                       query(req, "offset"), query(req, "limit")));
  });
  server.Post("/api/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, predict(req.body));
  });
  server.Post("/api/relevance", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, relevance(req.body));
  });
  server.Post("/api/brush", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, brush(req.body));
  });
  server.Post("/api/train", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, train(req.body));
  });
  server.Post("/api/experiments/imbalance",
              [this, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, start_imbalance(req.body));
              });
  server.Get(R"(/api/experiments/imbalance/([^/]+))",
             [this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, imbalance_status(req.matches[1]));
             });
  if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir);
}

bool Service::run() {
  if (!server_) {
    server_ = std::make_unique<httplib::Server>();
    mount(*server_);
  }
  return server_->listen(config_.host, config_.port);
}

int Service::bind_any_port() {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  return server_->bind_to_any_port(config_.host);
}

void Service::run_bound() {
  if (server_) server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace biaslab
