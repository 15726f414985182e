#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gsc/carpet.hpp"
#include "gsc/error.hpp"
#include "gsc/graphs.hpp"
#include "gsc/limits.hpp"
#include "gsc/studies.hpp"

namespace gsc {

/// Every problem found in a configuration document, not just the first.
class ConfigError : public InputError {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Failure to read or write a file.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Configuration
//
// A JSON object with up to four sections, all optional:
//
//   "carpet": preset name ("sierpinski_carpet", "menger_sponge") or
//             {"name", "dimension", "length_scale", "cells", "allow_full_cube"}
//   "solver": {"pad", "max_ambient_level", "rho_hat", "rho_level",
//              "max_cells", "max_vertices", "max_unknowns"}
//   "mcmc":   {"burnin", "steps", "thinning", "order", "exterior", "chains"}
//   "study":  {"n_min", "n_max", "k", "x0", "alpha", "wall_samples",
//              "centres", "eps", "trials", "refinement", "density",
//              "master_seed", "record_runtime"}
//
// A bare carpet object (top-level "dimension" key) is also accepted as a
// whole document. Unknown keys are errors.

struct ConfigDocument {
  StudyPlan plan;  // carries the carpet, pad and chain settings
  Limits limits;   // environment defaults overridden by the solver section
  std::string source;
};

ConfigDocument parse_config(const std::filesystem::path& path);
ConfigDocument parse_config_text(std::string_view text, const std::string& source = "<string>");
/// Carpet section alone (object or preset name).
CarpetSpec parse_carpet(const nlohmann::json& j);

nlohmann::json carpet_to_json(const CarpetSpec& spec);
/// Round-trips through parse_config_text.
nlohmann::json config_to_json(const ConfigDocument& doc);

// ---------------------------------------------------------------------------
// Serialization

/// Shortest round-trip text is not required; reals are written with 17
/// significant digits. Non-finite values become "nan", "inf", "-inf".
std::string format_real(double x);

/// FNV-1a 64-bit digest of the bytes, as 16 hex digits.
std::string digest(std::string_view bytes);

inline constexpr std::string_view kReportColumns = "study,spec,N,quantity,value,stderr,flags,seed,runtime_ms";

std::string report_csv(const StudyReport& report);
nlohmann::json report_json(const StudyReport& report);
StudyReport report_from_json(const nlohmann::json& j);

nlohmann::json validation_json(const CarpetSpec& spec, const ValidationReport& report);
std::string validation_text(const CarpetSpec& spec, const ValidationReport& report);

/// "id x_1 ... x_d" per line, vertices in lexicographic coordinate order.
std::string graph_vertex_table(const LatticeGraph& graph);
/// "u v" per line, u < v.
std::string graph_edge_list(const LatticeGraph& graph);

/// One row per sample (columns of `samples`), one column per vertex label.
std::string samples_csv(const Eigen::MatrixXd& samples, const std::vector<std::string>& vertex_labels,
                        const std::vector<std::string>& sample_labels = {});

/// Writes the bytes (binary mode) and returns their digest.
std::string write_file(const std::filesystem::path& path, std::string_view bytes);

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
  std::string tool_version;
  std::string spec_hash;
  std::vector<std::string> command_line;
  std::uint64_t master_seed = 0;
  std::string timestamp;  // fixed epoch string in deterministic mode
  std::map<std::string, std::uint64_t> task_seeds;
  std::map<std::string, std::string> outputs;  // file name -> digest
  nlohmann::json config;

  /// Writes the file, records its digest here and returns it.
  std::string emit(const std::filesystem::path& path, std::string_view bytes);
  nlohmann::json to_json() const;
};

std::string tool_version();
/// UTC ISO-8601 time, or the epoch when `deterministic`.
std::string timestamp(bool deterministic);

}  // namespace gsc
