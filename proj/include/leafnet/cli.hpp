#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leafnet/image.hpp"
#include "leafnet/model_io.hpp"
#include "leafnet/treatments.hpp"

namespace leafnet::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,  // bad flags, dataset or image problems
  kModel = 3,  // model load failure or numeric divergence
  kIo = 4,
};

struct PredictionReport {
  std::string class_name;
  double confidence = 0;
  std::vector<std::pair<std::string, double>> top_k;  // descending probability
  std::optional<TreatmentRule> treatment;
  std::string model_id;
};

/// Resizes to the model's input, runs one eval-mode forward pass and looks
/// up the treatment for the winning class.
PredictionReport predict(const LoadedModel& loaded, const ImageBuffer& image, const std::vector<TreatmentRule>& rules,
                         int top_k = 3);

/// {"class", "confidence", "top_k": [{"class", "p"}], "treatment", "model_id"}
nlohmann::ordered_json to_json(const PredictionReport& report);

/// Entry point behind the `leafnet` binary; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace leafnet::cli
