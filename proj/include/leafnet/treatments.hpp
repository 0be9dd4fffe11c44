#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace leafnet {

enum class AgentType { Pesticide, Fungicide, Bactericide, Other };

const char* agent_type_name(AgentType t);
AgentType parse_agent_type(const std::string& s);

struct TreatmentRule {
  std::string class_name;
  AgentType agent_type = AgentType::Other;
  std::string treatment;
  std::optional<std::string> notes;

  friend bool operator==(const TreatmentRule&, const TreatmentRule&) = default;
};

/// A JSON array of {class_name, agent_type, treatment, notes?} objects.
/// Throws ConfigError on malformed input or a repeated class_name.
std::vector<TreatmentRule> parse_treatments(const std::string& json_text);
std::vector<TreatmentRule> load_treatments(const std::filesystem::path& path);

/// Exact, case-sensitive lookup.
std::optional<TreatmentRule> recommend(const std::string& class_name, const std::vector<TreatmentRule>& rules);

nlohmann::ordered_json treatment_json(const TreatmentRule& rule);

}  // namespace leafnet
