#include "biaslab/cli.hpp"

#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "biaslab/analysis.hpp"
#include "biaslab/io.hpp"
#include "biaslab/lrp.hpp"
#include "biaslab/scenario.hpp"
#include "biaslab/service.hpp"

namespace biaslab {

namespace {

struct Options {
  // generate
  std::string bias = "none";
  std::string feature = "pytorch";
  double cap = 0.7;
  double ratio = 0.1;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string split = "train";
  // train / evaluate / explain / analyze
  std::string data;
  std::string test;
  std::string model;
  std::string skills;
  std::string university;
  std::string selection = "all";
  double epsilon = 0.01;
  double learning_rate = TrainConfig{}.learning_rate;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t batch_size = TrainConfig{}.batch_size;
  // sweep-imbalance
  std::size_t test_n = SweepConfig{}.test_size;
  std::uint64_t data_seed = SweepConfig{}.train_seed;
  std::uint64_t test_seed = SweepConfig{}.test_seed;
  // serve
  int port = 8080;
  std::string static_dir;
  bool pretrain = false;

  std::string output;
};

BiasSpec bias_from_options(const Options& o) {
  if (o.bias == "none") return NoBias{};
  if (o.bias == "covariate") return CovariateShift{parse_skill(o.feature), o.cap};
  if (o.bias == "selection") return default_selection_bias();
  if (o.bias == "imbalance") return Imbalance{o.ratio};
  throw std::invalid_argument("unknown bias '" + o.bias + "'");
}

Applicant applicant_from_options(const Options& o) {
  Applicant a;
  std::stringstream ss(o.skills);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= kNumSkills) throw std::invalid_argument("--skills takes exactly four values");
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("--skills value '" + item + "' is not a score in [0, 1]");
    }
    a.skills[i++] = v;
  }
  if (i != kNumSkills) throw std::invalid_argument("--skills takes exactly four values");
  a.university = University::parse(o.university);
  return a;
}

// Writes the document to -o when given, otherwise prints it.
void emit(const Options& o, const json& doc, std::ostream& out, const std::string& summary) {
  if (o.output.empty()) {
    out << to_document(doc);
  } else {
    write_document(o.output, doc);
    out << summary << " -> " << o.output << "\n";
  }
}

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

int cmd_generate(const Options& o, std::ostream& out) {
  const Dataset d = generate(o.n, o.seed, bias_from_options(o), parse_split(o.split));
  emit(o, dataset_to_json(d), out,
       "generated " + std::to_string(d.size()) + " examples (" + std::string(bias_kind(d.bias)) +
           ", invite fraction " + percent(d.invite_fraction()) + ")");
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const Dataset d = dataset_from_json(read_document(o.data));
  std::optional<Dataset> held_out;
  if (!o.test.empty()) held_out = dataset_from_json(read_document(o.test));
  TrainConfig config;
  config.seed = o.seed;
  config.learning_rate = o.learning_rate;
  config.epochs = o.epochs;
  config.batch_size = o.batch_size;
  const TrainedModel m = train(d, config, held_out ? &*held_out : nullptr);
  std::string summary = "trained on " + std::to_string(d.size()) + " examples, final loss " +
                        percent(m.report.epoch_loss.back()) + ", train accuracy " +
                        percent(m.report.train_accuracy);
  if (m.report.held_out_accuracy) summary += ", held-out accuracy " + percent(*m.report.held_out_accuracy);
  emit(o, model_to_json(m), out, summary);
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const TrainedModel m = model_from_json(read_document(o.model));
  const Dataset d = dataset_from_json(read_document(o.data));
  const Evaluation e = evaluate(m.params, d);
  emit(o, evaluation_to_json(e), out, "accuracy " + percent(e.accuracy));
  return 0;
}

int cmd_explain(const Options& o, std::ostream& out) {
  const TrainedModel m = model_from_json(read_document(o.model));
  const Applicant a = applicant_from_options(o);
  const RelevanceVector r = explain(m.params, a, LrpConfig{o.epsilon});
  emit(o, relevance_to_json(r), out, "probability " + percent(r.probability));
  return 0;
}

int cmd_coverage(const Options& o, std::ostream& out) {
  const Dataset train_set = dataset_from_json(read_document(o.data));
  const Dataset test_set = dataset_from_json(read_document(o.test));
  const CoverageReport r = coverage_report(train_set, test_set);
  emit(o, coverage_to_json(r), out, "coverage report");
  return 0;
}

int cmd_association(const Options& o, std::ostream& out) {
  const Dataset d = dataset_from_json(read_document(o.data));
  emit(o, association_to_json(university_label_association(d)), out, "association report");
  return 0;
}

int cmd_brush(const Options& o, std::ostream& out) {
  const TrainedModel m = model_from_json(read_document(o.model));
  const Dataset d = dataset_from_json(read_document(o.data));
  const json raw = o.selection == "all" ? json("all") : json::parse(o.selection, nullptr, false);
  if (raw.is_discarded()) throw FormatError("--selection is not valid JSON");
  const BrushResult r = brush(d, m.params, brush_selection_from_json(raw));
  emit(o, brush_to_json(r, r.rows.size()), out, std::to_string(r.count) + " examples selected");
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  SweepConfig config;
  config.train_size = o.n;
  config.test_size = o.test_n;
  config.train_seed = o.data_seed;
  config.test_seed = o.test_seed;
  config.train.seed = o.seed;
  config.train.learning_rate = o.learning_rate;
  config.train.epochs = o.epochs;
  config.train.batch_size = o.batch_size;
  const PieQuadruple p = imbalance_sweep(o.ratio, config);
  out << "train invite ratio     " << percent(p.train_invite_ratio) << "\n"
      << "test invite ratio      " << percent(p.test_invite_ratio) << "\n"
      << "predicted invite ratio " << percent(p.predicted_invite_ratio) << "\n"
      << "right invite " << p.breakdown.true_invite << ", wrong invite " << p.breakdown.false_invite
      << ", right reject " << p.breakdown.true_reject << ", wrong reject "
      << p.breakdown.false_reject << "\n";
  if (!o.output.empty()) write_document(o.output, pie_to_json(p));
  else out << to_document(pie_to_json(p));
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err, bool port_given,
              bool static_given) {
  ServiceConfig config;
  apply_environment(config);
  if (port_given) config.port = o.port;
  if (static_given) config.static_dir = o.static_dir;
  config.pretrain = o.pretrain;
  Service service(config);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  out << "serving on http://" << config.host << ":" << config.port << std::endl;
  const bool ok = service.run();
  g_service = nullptr;
  if (!ok) {
    err << "error: cannot listen on port " << config.port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset bias laboratory: generate, train, explain, analyze"};
  app.require_subcommand(1, 1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Generate a labeled applicant dataset");
  gen->add_option("--bias", o.bias, "none|covariate|selection|imbalance")
      ->check(CLI::IsMember({"none", "covariate", "selection", "imbalance"}));
  gen->add_option("--feature", o.feature, "Skill capped by covariate shift");
  gen->add_option("--cap", o.cap, "Covariate shift cap")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--ratio", o.ratio, "Imbalance invite ratio")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--n", o.n, "Number of examples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.seed, "Dataset seed");
  gen->add_option("--split", o.split, "train|test")->check(CLI::IsMember({"train", "test"}));
  gen->add_option("-o,--output", o.output, "Output file");

  auto add_train_flags = [&o](CLI::App* cmd) {
    cmd->add_option("--lr", o.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", o.epochs, "Epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", o.batch_size, "Batch size")->check(CLI::PositiveNumber);
  };

  auto* tr = app.add_subcommand("train", "Train a classifier on a dataset file");
  tr->add_option("--data", o.data, "Training dataset")->required();
  tr->add_option("--test", o.test, "Held-out dataset for the report");
  tr->add_option("--seed", o.seed, "Model seed");
  add_train_flags(tr);
  tr->add_option("-o,--output", o.output, "Output model file");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
  ev->add_option("--model", o.model, "Model file")->required();
  ev->add_option("--data", o.data, "Dataset file")->required();
  ev->add_option("-o,--output", o.output, "Output file");

  auto* ex = app.add_subcommand("explain", "Relevance of each feature for one applicant");
  ex->add_option("--model", o.model, "Model file")->required();
  ex->add_option("--skills", o.skills, "statistics,python,pytorch,matlab")->required();
  ex->add_option("--university", o.university, "University1..University10")->required();
  ex->add_option("--epsilon", o.epsilon, "LRP stabilizer")->check(CLI::PositiveNumber);
  ex->add_option("-o,--output", o.output, "Output file");

  auto* an = app.add_subcommand("analyze", "Bias detection reports");
  an->require_subcommand(1, 1);
  auto* cov = an->add_subcommand("coverage", "Per-skill coverage above 0.7, train vs test");
  cov->add_option("--data", o.data, "Training dataset")->required();
  cov->add_option("--test", o.test, "Test dataset")->required();
  cov->add_option("-o,--output", o.output, "Output file");
  auto* assoc = an->add_subcommand("association", "Per-university invite rate and lift");
  assoc->add_option("--data", o.data, "Dataset")->required();
  assoc->add_option("-o,--output", o.output, "Output file");
  auto* br = an->add_subcommand("brush", "Select examples by axis ranges");
  br->add_option("--model", o.model, "Model file")->required();
  br->add_option("--data", o.data, "Dataset")->required();
  br->add_option("--selection", o.selection, "\"all\" or a JSON selection object");
  br->add_option("-o,--output", o.output, "Output file");

  auto* sw = app.add_subcommand("sweep-imbalance", "Train at an invite ratio, test at 0.10");
  sw->add_option("--ratio", o.ratio, "Training invite ratio")->required()->check(CLI::Range(0.0, 1.0));
  sw->add_option("--n", o.n, "Training set size")->check(CLI::PositiveNumber);
  sw->add_option("--test-n", o.test_n, "Test set size")->check(CLI::PositiveNumber);
  sw->add_option("--seed", o.seed, "Model seed");
  sw->add_option("--data-seed", o.data_seed, "Training data seed");
  sw->add_option("--test-seed", o.test_seed, "Test data seed");
  add_train_flags(sw);
  sw->add_option("-o,--output", o.output, "Output file");

  auto* sv = app.add_subcommand("serve", "Run the HTTP API");
  auto* port_opt = sv->add_option("--port", o.port, "Port")->check(CLI::Range(1, 65535));
  auto* static_opt = sv->add_option("--static", o.static_dir, "UI bundle directory");
  sv->add_flag("--pretrain", o.pretrain, "Train every scenario at startup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  // The sweep's model seed follows the shipped default unless given.
  if (sw->parsed() && sw->count("--seed") == 0) o.seed = SweepConfig{}.train.seed;

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_evaluate(o, out);
    if (ex->parsed()) return cmd_explain(o, out);
    if (cov->parsed()) return cmd_coverage(o, out);
    if (assoc->parsed()) return cmd_association(o, out);
    if (br->parsed()) return cmd_brush(o, out);
    if (sw->parsed()) return cmd_sweep(o, out);
    if (sv->parsed()) return cmd_serve(o, out, err, port_opt->count() > 0, static_opt->count() > 0);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace biaslab
