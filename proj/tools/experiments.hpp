#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobius/error.hpp"
#include "mobius/point_space.hpp"
#include "toml.hpp"

namespace mobius::lab {

using Json = nlohmann::ordered_json;

/// Malformed or incomplete experiment configuration (exit status 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Experiment {
  toml::table config;
  std::filesystem::path config_path;  ///< relative input files resolve against its directory
  std::optional<std::uint64_t> seed_override;
};

/// Parses the TOML file. Throws ConfigError for unreadable or malformed files.
Experiment load_experiment(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

struct OutputFile {
  std::filesystem::path path;
  std::string content;
};

struct Outcome {
  Json report;  ///< everything except the timestamp
  bool passed = true;
  std::vector<OutputFile> files;  ///< CSV tables requested by the config
  std::filesystem::path report_path;
};

/// Runs the configured experiment. Config problems raise ConfigError (or the
/// library's PreconditionError/ParseError); a numeric procedure that cannot
/// reach its tolerance raises NumericError. Failed checks are reported via
/// `passed`, not thrown.
Outcome run_experiment(const Experiment& exp);

std::vector<std::string> experiment_kinds();

/// Report text as written to disk: the report plus a `timestamp` field.
std::string render_report(const Json& report, const std::string& timestamp);
std::string utc_timestamp();

/// Write to a sibling temporary file, then rename over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct ConvertResult {
  PointSpace space;
  Json provenance;
};

/// Applies a transform chain such as "inverse_cayley@p3,cayley@inf" left to
/// right. Steps: cayley@<id>, inverse_cayley@<id>, snowflake:<alpha>,
/// chain_smooth. Step failures are rethrown as ConfigError naming the step.
ConvertResult convert_space(const PointSpace& input, const std::string& chain, std::size_t spot_quadruples,
                            std::uint64_t seed);

}  // namespace mobius::lab
