#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "citepref/audit.hpp"
#include "citepref/backend.hpp"
#include "citepref/corpus.hpp"
#include "citepref/fit/glmm.hpp"
#include "citepref/http_backend.hpp"
#include "citepref/retry.hpp"
#include "citepref/simulator.hpp"

namespace citepref {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackendKind { Simulator, Http };

struct BackendSpec {
  std::string id;
  BackendKind kind = BackendKind::Simulator;
  SimConfig sim;
  HttpBackendConfig http;
};

struct RunConfig {
  /// Exactly one of corpus_path / synth is set.
  std::optional<std::filesystem::path> corpus_path;
  std::optional<SynthConfig> synth;
  std::vector<BackendSpec> backends;
  int reps = 5;
  std::uint64_t seed = 0;
  int parallelism = 1;
  double alpha = 0.05;
  std::filesystem::path output_dir = "out";
  fit::AnalysisConfig analysis;
  RetryPolicy retry;

  std::vector<std::string> model_ids() const;
  /// Throws ConfigError on reps < 1, parallelism < 1, alpha outside (0,1), no or duplicate
  /// backends, or a missing corpus source.
  void validate() const;
};

/// Parses YAML. Relative paths resolve against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(const std::string& yaml, const std::filesystem::path& base_dir);
/// Relative paths inside the file resolve against its directory.
RunConfig load_run_config(const std::filesystem::path& path);

/// Simulator backends draw from `seed`, so all randomness follows the run seed.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed);

/// YAML (or JSON) with `names` and `domains` lists.
BrandProfile parse_brand_profile(const std::string& yaml);
BrandProfile load_brand_profile(const std::filesystem::path& path);

}  // namespace citepref
