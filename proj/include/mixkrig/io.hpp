#ifndef MIXKRIG_IO_HPP
#define MIXKRIG_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixkrig/types.hpp"

namespace mixkrig {

/// Shortest round-trip decimal form of a double (to_chars); all files use
/// this so identical values serialize to identical bytes.
std::string format_double(double x);

std::uint64_t fnv1a64(const std::string& bytes);
std::string digest_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// Tabular formats.  Lines starting with '#' are skipped on read (results
// files embed their manifest that way).

/// Dataset CSV: header u1,...,uI,v1,...,vJ,y; qualitative columns hold
/// 1-based integer levels.  The sidecar descriptor supplies level_counts
/// and ordinal_flags.
Dataset read_dataset_csv(const std::string& csv_text, const std::vector<int>& level_counts,
                         const std::vector<bool>& ordinal_flags);
std::string write_dataset_csv(const Dataset& data);

/// Points CSV: the dataset format without the y column.
std::vector<MixedInput> read_points_csv(const std::string& csv_text, int quant_dim, int qual_dim);

/// Headerless numeric matrix (used by the canon subcommand).
Eigen::MatrixXd read_matrix_csv(const std::string& csv_text);
std::string write_matrix_csv(const Eigen::MatrixXd& m);

// ---------------------------------------------------------------------------
// Descriptor / config JSON

struct DatasetDescriptor {
  std::vector<int> level_counts;
  std::vector<bool> ordinal_flags;
};

DatasetDescriptor descriptor_from_json(const nlohmann::json& j);
nlohmann::json descriptor_to_json(const DatasetDescriptor& d);

ModelConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ModelConfig& config);

nlohmann::json params_to_json(const FullParams& params);
FullParams params_from_json(const nlohmann::json& j);

/// Self-contained fitted-model document (training data inline; the
/// factorization is rebuilt deterministically on load).
nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> input_digests;  // (name, hex)
  std::string tool_version;
  double wall_time_s = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& m);
/// One-line '# ...' comment embedding the manifest in CSV outputs.
std::string manifest_csv_line(const RunManifest& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

extern const char* kToolVersion;

}  // namespace mixkrig

#endif  // MIXKRIG_IO_HPP
