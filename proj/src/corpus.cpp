#include "citepref/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace citepref {

namespace {

const char* variant_name(Variant v) { return v == Variant::A ? "A" : "B"; }

Variant parse_variant(const std::string& s) {
  if (s == "A") return Variant::A;
  if (s == "B") return Variant::B;
  throw std::invalid_argument("variant_id must be \"A\" or \"B\", got \"" + s + "\"");
}

Json variant_to_json(const VariantDoc& d) {
  Json j = d.extra.is_object() ? d.extra : Json::object();
  j["variant_id"] = variant_name(d.variant_id);
  j["title"] = d.title;
  j["url"] = d.url;
  j["body"] = d.body;
  j["declared_length"] = d.declared_length;
  return j;
}

VariantDoc variant_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("variant must be an object");
  VariantDoc d;
  d.variant_id = parse_variant(j.at("variant_id").get<std::string>());
  d.title = j.at("title").get<std::string>();
  d.url = j.at("url").get<std::string>();
  d.body = j.at("body").get<std::string>();
  d.declared_length = j.at("declared_length").get<std::size_t>();
  d.extra = Json::object();
  for (const auto& [k, v] : j.items()) {
    if (k != "variant_id" && k != "title" && k != "url" && k != "body" && k != "declared_length") {
      d.extra[k] = v;
    }
  }
  return d;
}

}  // namespace

Corpus::Corpus(std::vector<Scenario> scenarios) : scenarios_(std::move(scenarios)) {
  for (std::size_t i = 0; i < scenarios_.size(); ++i) {
    const auto& s = scenarios_[i];
    if (!find_factor(s.factor_id)) {
      throw CorpusError(CorpusError::Kind::UnknownFactor, 0,
                        "scenario " + s.scenario_id + ": unknown factor_id " + std::to_string(s.factor_id));
    }
    if (!index_.emplace(s.scenario_id, i).second) {
      throw CorpusError(CorpusError::Kind::DuplicateId, 0, "duplicate scenario_id: " + s.scenario_id);
    }
  }
}

const Scenario* Corpus::find(const std::string& scenario_id) const {
  auto it = index_.find(scenario_id);
  return it == index_.end() ? nullptr : &scenarios_[it->second];
}

const Scenario& Corpus::at(const std::string& scenario_id) const {
  if (const auto* s = find(scenario_id)) return *s;
  throw std::out_of_range("unknown scenario_id: " + scenario_id);
}

Json to_json(const Scenario& s) {
  Json j = s.extra.is_object() ? s.extra : Json::object();
  j["scenario_id"] = s.scenario_id;
  j["factor_id"] = s.factor_id;
  j["blog_id"] = s.blog_id;
  j["variant_a"] = variant_to_json(s.variant_a);
  j["variant_b"] = variant_to_json(s.variant_b);
  j["queries"] = s.queries;
  j["tool_query"] = s.tool_query;
  return j;
}

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario record must be a JSON object");
  Scenario s;
  s.scenario_id = j.at("scenario_id").get<std::string>();
  s.factor_id = j.at("factor_id").get<int>();
  s.blog_id = j.at("blog_id").get<std::string>();
  s.variant_a = variant_from_json(j.at("variant_a"));
  s.variant_b = variant_from_json(j.at("variant_b"));
  s.queries = j.at("queries").get<std::vector<std::string>>();
  s.tool_query = j.at("tool_query").get<std::string>();
  static const char* kKnown[] = {"scenario_id", "factor_id", "blog_id", "variant_a",
                                 "variant_b", "queries", "tool_query"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), k) == std::end(kKnown)) s.extra[k] = v;
  }
  return s;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<Scenario> scenarios;
  std::map<std::string, std::size_t> seen;
  try {
    for_each_jsonl(path, [&](std::size_t line, const Json& j) {
      Scenario s;
      try {
        s = scenario_from_json(j);
      } catch (const std::invalid_argument& e) {
        throw CorpusError(CorpusError::Kind::Malformed, line,
                          path.string() + ":" + std::to_string(line) + ": malformed record: " + e.what());
      } catch (const Json::exception& e) {
        throw CorpusError(CorpusError::Kind::Malformed, line,
                          path.string() + ":" + std::to_string(line) + ": malformed record: " + e.what());
      }
      if (!find_factor(s.factor_id)) {
        throw CorpusError(CorpusError::Kind::UnknownFactor, line,
                          path.string() + ":" + std::to_string(line) + ": unknown factor_id " +
                              std::to_string(s.factor_id) + " (valid: 1.." + std::to_string(kFactorCount) + ")");
      }
      if (auto [it, inserted] = seen.emplace(s.scenario_id, line); !inserted) {
        throw CorpusError(CorpusError::Kind::DuplicateId, line,
                          path.string() + ":" + std::to_string(line) + ": duplicate scenario_id " +
                              s.scenario_id + " (first seen on line " + std::to_string(it->second) + ")");
      }
      scenarios.push_back(std::move(s));
    });
  } catch (const JsonlError& e) {
    throw CorpusError(CorpusError::Kind::Malformed, e.line(), e.what());
  }
  return Corpus(std::move(scenarios));
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.scenarios()) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

double length_disparity(const Scenario& s) {
  const double la = static_cast<double>(utf8_length(s.variant_a.body));
  const double lb = static_cast<double>(utf8_length(s.variant_b.body));
  const double denom = std::max(la, lb);
  if (denom == 0.0) return 0.0;
  return std::abs(la - lb) / denom;
}

ValidationReport validate_scenario(const Scenario& s, const std::vector<std::string>& blocklist) {
  ValidationReport report;
  report.scenario_id = s.scenario_id;
  auto add = [&](std::string rule, std::string msg) {
    report.violations.push_back({std::move(rule), std::move(msg)});
  };

  if (s.queries.size() != kQueriesPerScenario) {
    add("query_count", "query count ≠ 3 (found " + std::to_string(s.queries.size()) + ")");
  }
  if (s.variant_a.url == s.variant_b.url) {
    add("url_unique", "variant URLs are identical: " + s.variant_a.url);
  }
  for (const VariantDoc* d : {&s.variant_a, &s.variant_b}) {
    const std::string tag = std::string("variant ") + variant_name(d->variant_id);
    if (trim(d->body).empty()) add("empty_body", tag + " has an empty body");
    const std::size_t actual = utf8_length(d->body);
    if (d->declared_length != actual) {
      add("declared_length", tag + " declared_length " + std::to_string(d->declared_length) +
                                 " != actual " + std::to_string(actual));
    }
  }
  if (s.variant_a.variant_id != Variant::A || s.variant_b.variant_id != Variant::B) {
    add("variant_ids", "variant_a/variant_b must carry ids A/B");
  }
  const double disparity = length_disparity(s);
  if (disparity > kLengthParityTolerance) {
    std::ostringstream msg;
    msg.precision(3);
    msg << "length disparity " << disparity * 100.0 << "% exceeds 5%";
    add("length_parity", msg.str());
  }
  for (const auto& term : blocklist) {
    if (trim(term).empty()) continue;
    for (const VariantDoc* d : {&s.variant_a, &s.variant_b}) {
      if (find_word_ci(d->body, term) != std::string_view::npos) {
        add("brand_leak", std::string("blocklisted term \"") + term + "\" in variant " + variant_name(d->variant_id));
      }
    }
  }
  report.passed = report.violations.empty();
  return report;
}

}  // namespace citepref
