#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "biaslab/analysis.hpp"
#include "biaslab/datagen.hpp"
#include "biaslab/lrp.hpp"
#include "biaslab/model.hpp"

namespace biaslab {

using json = nlohmann::json;

// Version written into every document; readers reject anything else.
inline constexpr int kSchemaVersion = 1;

// Malformed or incompatible document.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json bias_to_json(const BiasSpec& bias);
BiasSpec bias_from_json(const json& j);

json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const json& j);
// Examples [offset, offset + limit) only; header fields as in the full document.
json dataset_page_to_json(const Dataset& dataset, std::size_t offset, std::size_t limit);

json applicant_to_json(const Applicant& a);
Applicant applicant_from_json(const json& j);

json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j);

json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const json& j);

json relevance_to_json(const RelevanceVector& r);
json evaluation_to_json(const Evaluation& e);
json brush_to_json(const BrushResult& r, std::size_t max_rows);
BrushSelection brush_selection_from_json(const json& j);
json coverage_to_json(const CoverageReport& r);
json association_to_json(const AssociationReport& r);
json pie_to_json(const PieQuadruple& p);
PieQuadruple pie_from_json(const json& j);

// Two-space indented document followed by a newline.
std::string to_document(const json& j);

// Throws FormatError for unreadable files, bad JSON, or a schema version
// other than kSchemaVersion.
json read_document(const std::filesystem::path& path);
void write_document(const std::filesystem::path& path, const json& j);

}  // namespace biaslab
