#include "leafnet/treatments.hpp"

#include <set>

#include "leafnet/errors.hpp"
#include "leafnet/metrics.hpp"

namespace leafnet {

const char* agent_type_name(AgentType t) {
  switch (t) {
    case AgentType::Pesticide: return "pesticide";
    case AgentType::Fungicide: return "fungicide";
    case AgentType::Bactericide: return "bactericide";
    case AgentType::Other: return "other";
  }
  return "other";
}

AgentType parse_agent_type(const std::string& s) {
  if (s == "pesticide") return AgentType::Pesticide;
  if (s == "fungicide") return AgentType::Fungicide;
  if (s == "bactericide") return AgentType::Bactericide;
  if (s == "other") return AgentType::Other;
  throw ConfigError("unknown agent_type \"" + s + "\"");
}

std::vector<TreatmentRule> parse_treatments(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("treatments file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("treatments file must hold a JSON array");
  std::vector<TreatmentRule> rules;
  std::set<std::string> seen;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("class_name") || !item.contains("agent_type") ||
        !item.contains("treatment")) {
      throw ConfigError("each treatment needs class_name, agent_type and treatment");
    }
    try {
      TreatmentRule r;
      r.class_name = item.at("class_name").get<std::string>();
      r.agent_type = parse_agent_type(item.at("agent_type").get<std::string>());
      r.treatment = item.at("treatment").get<std::string>();
      if (item.contains("notes") && !item.at("notes").is_null()) r.notes = item.at("notes").get<std::string>();
      if (!seen.insert(r.class_name).second) throw ConfigError("duplicate treatment for class \"" + r.class_name + "\"");
      rules.push_back(std::move(r));
    } catch (const nlohmann::json::type_error& e) {
      throw ConfigError(std::string("treatment field has the wrong type: ") + e.what());
    }
  }
  return rules;
}

std::vector<TreatmentRule> load_treatments(const std::filesystem::path& path) {
  return parse_treatments(read_text_file(path));
}

std::optional<TreatmentRule> recommend(const std::string& class_name, const std::vector<TreatmentRule>& rules) {
  for (const auto& r : rules) {
    if (r.class_name == class_name) return r;
  }
  return std::nullopt;
}

nlohmann::ordered_json treatment_json(const TreatmentRule& rule) {
  nlohmann::ordered_json j;
  j["agent_type"] = agent_type_name(rule.agent_type);
  j["treatment"] = rule.treatment;
  j["notes"] = rule.notes ? nlohmann::ordered_json(*rule.notes) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace leafnet
