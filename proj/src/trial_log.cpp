#include "citepref/trial_log.hpp"

#include <stdexcept>

namespace citepref {

Json to_json(const RawTrialResult& r) {
  return Json{{"trial_id", r.trial_id},
              {"answer_text", r.answer_text},
              {"attempts", r.attempts},
              {"latency_ms", r.latency.count()},
              {"backend_meta", r.backend_meta}};
}

RawTrialResult raw_result_from_json(const Json& j) {
  RawTrialResult r;
  r.trial_id = j.at("trial_id").get<std::string>();
  r.answer_text = j.at("answer_text").get<std::string>();
  r.attempts = j.at("attempts").get<int>();
  r.latency = std::chrono::milliseconds(j.value("latency_ms", std::int64_t{0}));
  r.backend_meta = j.value("backend_meta", std::string{});
  if (r.attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  return r;
}

TrialLog::TrialLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_)) {
    const std::string contents = read_file(path_);
    std::size_t pos = 0;
    std::size_t good_end = 0;
    std::size_t lineno = 0;
    while (pos < contents.size()) {
      const std::size_t nl = contents.find('\n', pos);
      ++lineno;
      if (nl == std::string::npos) break;  // torn tail
      const std::string_view line(contents.data() + pos, nl - pos);
      if (!trim(line).empty()) {
        RawTrialResult r;
        try {
          r = raw_result_from_json(Json::parse(line));
        } catch (const std::exception& e) {
          throw JsonlError(path_, lineno, std::string("malformed trial record: ") + e.what());
        }
        if (records_.emplace(r.trial_id, r).second) order_.push_back(r.trial_id);
      }
      pos = nl + 1;
      good_end = pos;
    }
    if (good_end < contents.size()) std::filesystem::resize_file(path_, good_end);
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open trial log: " + path_.string());
}

std::optional<RawTrialResult> TrialLog::find(const std::string& trial_id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(trial_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

bool TrialLog::contains(const std::string& trial_id) const {
  std::lock_guard lock(mu_);
  return records_.count(trial_id) != 0;
}

bool TrialLog::append(const RawTrialResult& result) {
  std::lock_guard lock(mu_);
  if (records_.count(result.trial_id) != 0) return false;
  out_ << to_json(result).dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("append to trial log failed: " + path_.string());
  records_.emplace(result.trial_id, result);
  order_.push_back(result.trial_id);
  return true;
}

std::size_t TrialLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<RawTrialResult> TrialLog::records() const {
  std::lock_guard lock(mu_);
  std::vector<RawTrialResult> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(records_.at(id));
  return out;
}

std::vector<RawTrialResult> load_trial_log(const std::filesystem::path& path) {
  std::vector<RawTrialResult> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back(raw_result_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw JsonlError(path, line, e.what());
    }
  });
  return out;
}

}  // namespace citepref
