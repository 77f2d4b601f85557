#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "citepref/factors.hpp"
#include "citepref/util.hpp"

namespace citepref {

enum class Variant { A, B };

struct VariantDoc {
  Variant variant_id = Variant::A;
  std::string title;
  std::string url;
  std::string body;
  std::size_t declared_length = 0;
  /// Fields not known to this version, preserved on round-trip.
  Json extra = Json::object();

  bool operator==(const VariantDoc&) const = default;
};

struct Scenario {
  std::string scenario_id;
  int factor_id = 0;
  std::string blog_id;
  VariantDoc variant_a;
  VariantDoc variant_b;
  std::vector<std::string> queries;
  std::string tool_query;
  Json extra = Json::object();

  bool operator==(const Scenario&) const = default;
};

/// Immutable after load; safe to share read-only.
class Corpus {
 public:
  Corpus() = default;
  /// Throws CorpusError on duplicate ids or unknown factors.
  explicit Corpus(std::vector<Scenario> scenarios);

  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  std::size_t size() const { return scenarios_.size(); }
  bool empty() const { return scenarios_.empty(); }

  /// nullptr when unknown.
  const Scenario* find(const std::string& scenario_id) const;
  const Scenario& at(const std::string& scenario_id) const;

  bool operator==(const Corpus& other) const { return scenarios_ == other.scenarios_; }

 private:
  std::vector<Scenario> scenarios_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind { Malformed, DuplicateId, UnknownFactor };
  CorpusError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(what), kind_(kind), line_(line) {}
  Kind kind() const { return kind_; }
  /// 1-based line of the offending record; 0 when not file-backed.
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

Json to_json(const Scenario& s);
/// Throws Json::exception / std::invalid_argument on missing or mistyped fields.
Scenario scenario_from_json(const Json& j);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

struct Violation {
  std::string rule_id;
  std::string message;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::string scenario_id;
  bool passed = true;
  std::vector<Violation> violations;
};

inline constexpr double kLengthParityTolerance = 0.05;
inline constexpr std::size_t kQueriesPerScenario = 3;

/// |len(A) - len(B)| / max(len), lengths in code points.
double length_disparity(const Scenario& s);

/// Mechanical checks only; violations are data, never exceptions.
ValidationReport validate_scenario(const Scenario& s, const std::vector<std::string>& blocklist = {});

struct SynthConfig {
  std::vector<int> factors = all_factor_ids();
  int per_factor = 80;
};

/// Template-based matched-pair corpus. Deterministic for a seed; every scenario validates.
Corpus synth_corpus(const SynthConfig& config, std::uint64_t seed);

}  // namespace citepref
