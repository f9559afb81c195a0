#include "biaslab/io.hpp"

#include <fstream>
#include <sstream>

namespace biaslab {

namespace {

void check_schema(const json& j, std::string_view what) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected a JSON object");
  if (!j.contains("schema_version")) {
    throw FormatError(std::string(what) + ": missing schema_version");
  }
  const json& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw FormatError(std::string(what) + ": schema version mismatch (expected " +
                      std::to_string(kSchemaVersion) + ", found " + v.dump() + ")");
  }
}

// Runs `fn`, turning library and domain exceptions into FormatError.
template <typename Fn>
auto guarded(std::string_view what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const std::out_of_range& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

json example_to_json(const LabeledExample& e) {
  json j = applicant_to_json(e.applicant);
  j["label"] = decision_name(e.label);
  return j;
}

Range range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError("range must be a [lower, upper] pair of numbers");
  }
  return Range(j[0].get<double>(), j[1].get<double>());
}

json dataset_header(const Dataset& d) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = d.seed;
  j["split_tag"] = split_name(d.split);
  j["bias"] = bias_to_json(d.bias);
  return j;
}

}  // namespace

json bias_to_json(const BiasSpec& bias) {
  json j;
  j["kind"] = bias_kind(bias);
  if (const auto* shift = std::get_if<CovariateShift>(&bias)) {
    j["feature"] = skill_name(shift->feature);
    j["cap"] = shift->cap;
  } else if (const auto* selection = std::get_if<SelectionBias>(&bias)) {
    json favored = json::object();
    for (std::size_t i = 0; i < kRosterSize; ++i) favored[University(i).name()] = selection->weights[i];
    j["favored"] = favored;
  } else if (const auto* imbalance = std::get_if<Imbalance>(&bias)) {
    j["invite_ratio"] = imbalance->invite_ratio;
  }
  return j;
}

BiasSpec bias_from_json(const json& j) {
  return guarded("bias", [&]() -> BiasSpec {
    const std::string kind = j.at("kind").get<std::string>();
    BiasSpec bias;
    if (kind == "none") {
      bias = NoBias{};
    } else if (kind == "covariate") {
      bias = CovariateShift{parse_skill(j.at("feature").get<std::string>()), j.at("cap").get<double>()};
    } else if (kind == "selection") {
      SelectionBias s;
      for (const auto& [name, weight] : j.at("favored").items()) {
        s.weights[University::parse(name).index()] = weight.get<double>();
      }
      bias = s;
    } else if (kind == "imbalance") {
      bias = Imbalance{j.at("invite_ratio").get<double>()};
    } else {
      throw FormatError("bias: unknown kind '" + kind + "'");
    }
    validate(bias);
    return bias;
  });
}

json applicant_to_json(const Applicant& a) {
  json skills;
  for (const Skill s : kAllSkills) skills[std::string(skill_name(s))] = a.skill(s);
  return json{{"skills", skills}, {"university", a.university.name()}};
}

Applicant applicant_from_json(const json& j) {
  return guarded("applicant", [&] {
    Applicant a;
    const json& skills = j.at("skills");
    for (const Skill s : kAllSkills) {
      const double v = skills.at(std::string(skill_name(s))).get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("skill " + std::string(skill_name(s)) + " = " +
                                    std::to_string(v) + " outside [0, 1]");
      }
      a.skills[static_cast<std::size_t>(s)] = v;
    }
    a.university = University::parse(j.at("university").get<std::string>());
    return a;
  });
}

json dataset_to_json(const Dataset& dataset) {
  json j = dataset_header(dataset);
  json examples = json::array();
  for (const auto& e : dataset.examples) examples.push_back(example_to_json(e));
  j["examples"] = std::move(examples);
  return j;
}

json dataset_page_to_json(const Dataset& dataset, std::size_t offset, std::size_t limit) {
  json j = dataset_header(dataset);
  j["total"] = dataset.size();
  j["offset"] = offset;
  json examples = json::array();
  for (std::size_t i = offset; i < dataset.size() && i - offset < limit; ++i) {
    examples.push_back(example_to_json(dataset.examples[i]));
  }
  j["examples"] = std::move(examples);
  return j;
}

Dataset dataset_from_json(const json& j) {
  check_schema(j, "dataset");
  return guarded("dataset", [&] {
    Dataset d;
    d.seed = j.at("seed").get<std::uint64_t>();
    d.split = parse_split(j.at("split_tag").get<std::string>());
    d.bias = bias_from_json(j.at("bias"));
    for (const json& e : j.at("examples")) {
      LabeledExample ex;
      ex.applicant = applicant_from_json(e);
      ex.label = parse_decision(e.at("label").get<std::string>());
      d.examples.push_back(ex);
    }
    return d;
  });
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
              {"batch_size", c.batch_size},       {"seed", c.seed},
              {"beta1", c.beta1},                 {"beta2", c.beta2},
              {"adam_epsilon", c.adam_epsilon}};
}

TrainConfig train_config_from_json(const json& j) {
  return guarded("config", [&] {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
    c.validate();
    return c;
  });
}

json model_to_json(const TrainedModel& model) {
  json layers = json::array();
  for (const auto& layer : model.params.layers) {
    layers.push_back(json{{"rows", layer.rows},
                          {"cols", layer.cols},
                          {"weights", layer.weights},
                          {"bias", layer.bias},
                          {"activation", activation_name(layer.activation)}});
  }
  json report{{"epoch_loss", model.report.epoch_loss},
              {"train_accuracy", model.report.train_accuracy}};
  report["held_out_accuracy"] =
      model.report.held_out_accuracy ? json(*model.report.held_out_accuracy) : json(nullptr);
  return json{{"schema_version", kSchemaVersion},
              {"config", train_config_to_json(model.config)},
              {"layers", layers},
              {"train_report", report}};
}

TrainedModel model_from_json(const json& j) {
  check_schema(j, "model");
  return guarded("model", [&] {
    TrainedModel m;
    m.config = train_config_from_json(j.at("config"));
    for (const json& l : j.at("layers")) {
      DenseLayer layer;
      layer.rows = l.at("rows").get<std::size_t>();
      layer.cols = l.at("cols").get<std::size_t>();
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.bias = l.at("bias").get<std::vector<double>>();
      layer.activation = parse_activation(l.at("activation").get<std::string>());
      m.params.layers.push_back(std::move(layer));
    }
    m.params.validate();
    const json& r = j.at("train_report");
    m.report.epoch_loss = r.at("epoch_loss").get<std::vector<double>>();
    m.report.train_accuracy = r.at("train_accuracy").get<double>();
    if (r.contains("held_out_accuracy") && !r.at("held_out_accuracy").is_null()) {
      m.report.held_out_accuracy = r.at("held_out_accuracy").get<double>();
    }
    return m;
  });
}

json relevance_to_json(const RelevanceVector& r) {
  json relative;
  if (r.relative.size() == kFeatureDim) {
    for (const Skill s : kAllSkills) relative[std::string(skill_name(s))] = r.skill_share(s);
    relative["university"] = r.university_share();
    json per_university;
    for (std::size_t i = 0; i < kRosterSize; ++i) {
      per_university[University(i).name()] = r.university_share(University(i));
    }
    relative["per_university"] = per_university;
  }
  return json{{"schema_version", kSchemaVersion},
              {"probability", r.probability},
              {"logit", r.logit},
              {"absolute", r.absolute},
              {"relative", relative}};
}

json evaluation_to_json(const Evaluation& e) {
  return json{{"schema_version", kSchemaVersion},
              {"accuracy", e.accuracy},
              {"mean_probability", e.mean_probability},
              {"predicted_invite_fraction", e.predicted_invite_fraction}};
}

json brush_to_json(const BrushResult& r, std::size_t max_rows) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.rows.size() && i < max_rows; ++i) {
    json row = example_to_json(r.rows[i].example);
    row["index"] = r.rows[i].index;
    row["probability"] = r.rows[i].probability;
    rows.push_back(std::move(row));
  }
  return json{{"schema_version", kSchemaVersion},
              {"count", r.count},
              {"mean_probability", r.mean_probability},
              {"invite_share", r.invite_share},
              {"truncated", r.rows.size() > max_rows},
              {"rows", rows}};
}

BrushSelection brush_selection_from_json(const json& j) {
  return guarded("selection", [&] {
    BrushSelection sel;
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "all")) return sel;
    if (!j.is_object()) throw FormatError("selection: expected \"all\" or an object");
    if (j.contains("skills")) {
      for (const auto& [name, range] : j.at("skills").items()) {
        sel.skill(parse_skill(name), range_from_json(range));
      }
    }
    if (j.contains("universities")) {
      std::vector<University> us;
      for (const json& u : j.at("universities")) us.push_back(University::parse(u.get<std::string>()));
      sel.universities = std::move(us);
    }
    if (j.contains("decisions")) {
      std::vector<Decision> ds;
      for (const json& d : j.at("decisions")) ds.push_back(parse_decision(d.get<std::string>()));
      sel.decisions = std::move(ds);
    }
    if (j.contains("probability")) sel.probability = range_from_json(j.at("probability"));
    sel.validate();
    return sel;
  });
}

json coverage_to_json(const CoverageReport& r) {
  json skills;
  bool any_warning = false;
  for (const SkillCoverage& c : r.skills) {
    skills[std::string(skill_name(c.skill))] = json{{"train_fraction", c.train_fraction},
                                                   {"test_fraction", c.test_fraction},
                                                   {"shift_warning", c.shift_warning}};
    any_warning = any_warning || c.shift_warning;
  }
  return json{{"schema_version", kSchemaVersion},
              {"threshold", r.threshold},
              {"skills", skills},
              {"covariate_shift_warning", any_warning}};
}

json association_to_json(const AssociationReport& r) {
  json universities;
  for (std::size_t i = 0; i < kRosterSize; ++i) {
    const UniversityAssociation& u = r.universities[i];
    universities[University(i).name()] =
        u.present() ? json{{"count", u.count}, {"invite_rate", u.invite_rate}, {"lift", u.lift}}
                    : json{{"count", 0}, {"absent", true}};
  }
  return json{{"schema_version", kSchemaVersion},
              {"global_invite_rate", r.global_invite_rate},
              {"universities", universities}};
}

json pie_to_json(const PieQuadruple& p) {
  return json{{"schema_version", kSchemaVersion},
              {"train_invite_ratio", p.train_invite_ratio},
              {"test_invite_ratio", p.test_invite_ratio},
              {"predicted_invite_ratio", p.predicted_invite_ratio},
              {"breakdown",
               {{"true_invite", p.breakdown.true_invite},
                {"false_invite", p.breakdown.false_invite},
                {"true_reject", p.breakdown.true_reject},
                {"false_reject", p.breakdown.false_reject}}}};
}

PieQuadruple pie_from_json(const json& j) {
  check_schema(j, "pie");
  return guarded("pie", [&] {
    PieQuadruple p;
    p.train_invite_ratio = j.at("train_invite_ratio").get<double>();
    p.test_invite_ratio = j.at("test_invite_ratio").get<double>();
    p.predicted_invite_ratio = j.at("predicted_invite_ratio").get<double>();
    const json& b = j.at("breakdown");
    p.breakdown.true_invite = b.at("true_invite").get<std::size_t>();
    p.breakdown.false_invite = b.at("false_invite").get<std::size_t>();
    p.breakdown.true_reject = b.at("true_reject").get<std::size_t>();
    p.breakdown.false_reject = b.at("false_reject").get<std::size_t>();
    return p;
  });
}

std::string to_document(const json& j) { return j.dump(2) + "\n"; }

json read_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open input file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw FormatError("'" + path.string() + "' is not valid JSON");
  check_schema(j, path.string());
  return j;
}

void write_document(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write output file '" + path.string() + "'");
  out << to_document(j);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace biaslab
