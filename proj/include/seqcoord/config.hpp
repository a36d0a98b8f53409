#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqcoord/sim_harness.hpp"

namespace seqcoord {

inline constexpr const char* kSchema = "seqcoord/1";
inline constexpr const char* kToolVersion = "0.1.0";

// Everything a run reads from its JSON file. Tensors are nested arrays,
// alphabets label lists, function classes tagged objects.
struct RunConfig {
  Alphabet states;
  Alphabet actions;
  ExperimentConfig experiment;
  std::vector<double> snr;                    // AWGN rows of `bounds`
  std::optional<Eigen::MatrixXd> action_metric;  // for the test-channel bound
};

// Parse errors carry the line and column; field errors carry the dotted path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const FunctionClass& fc);
FunctionClass function_class_from_json(const nlohmann::json& j, const std::string& where);

// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
};

nlohmann::json to_json(const RunManifest& manifest);
std::string utc_now();

nlohmann::json to_json(const ExperimentResult& result);
nlohmann::json to_json(const RdSolution& solution);
nlohmann::json to_json(const DirectedKernel& kernel);

// Columns: N, trials, distortion_mean, distortion_se, entropy_norm,
// entropy_mode, rate_ref, entropy_cap.
std::string results_csv(const ExperimentResult& result);

// {"schema", "horizon", "block", "branch_counts", "error_word", "nodes": {
// "1.2": [labels...], ...}}; node keys are dotted child-index paths.
nlohmann::json codebook_to_json(const TreeCodebook& codebook, const Alphabet& actions);

// Throws IoError.
void write_text(const std::string& path, const std::string& text);

}  // namespace seqcoord
