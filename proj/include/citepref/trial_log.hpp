#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "citepref/util.hpp"

namespace citepref {

struct RawTrialResult {
  std::string trial_id;
  std::string answer_text;
  int attempts = 1;
  std::chrono::milliseconds latency{0};
  std::string backend_meta;

  bool operator==(const RawTrialResult&) const = default;
};

Json to_json(const RawTrialResult& r);
RawTrialResult raw_result_from_json(const Json& j);

/// Append-only JSON Lines store keyed by trial_id. Safe for concurrent writers.
///
/// Opening an existing log loads every complete record. A torn final line
/// (a crash mid-append) is truncated away so the next append starts clean.
class TrialLog {
 public:
  explicit TrialLog(std::filesystem::path path);

  std::optional<RawTrialResult> find(const std::string& trial_id) const;
  bool contains(const std::string& trial_id) const;
  /// False (and nothing written) if the id is already present.
  bool append(const RawTrialResult& result);
  std::size_t size() const;
  std::vector<RawTrialResult> records() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, RawTrialResult> records_;
  std::vector<std::string> order_;
  std::ofstream out_;
};

/// Every record in file order; throws JsonlError on malformed interior lines.
std::vector<RawTrialResult> load_trial_log(const std::filesystem::path& path);

}  // namespace citepref
