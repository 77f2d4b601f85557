#include "citepref/extract.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

namespace citepref {

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

bool is_url_char(unsigned char c) {
  if (c <= 0x20 || c == 0x7F) return false;
  switch (c) {
    case '<': case '>': case '"': case '`': case '\'': case '[': case ']': case '{': case '}': case '|': case '\\':
    case '^':
      return false;
    default:
      return true;
  }
}

}  // namespace

std::string_view to_string(CitationResult r) {
  switch (r) {
    case CitationResult::AFirst: return "A_first";
    case CitationResult::BFirst: return "B_first";
    case CitationResult::Excluded: return "excluded";
  }
  return "excluded";
}

std::string_view to_string(ExclusionReason r) {
  return r == ExclusionReason::NoUrl ? "no_url" : "foreign_first_url";
}

std::vector<std::string> find_urls(std::string_view text) {
  std::vector<std::string> urls;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t scheme_len = 0;
    const std::string_view rest = text.substr(i);
    if (starts_with_ci(rest, "https://")) scheme_len = 8;
    else if (starts_with_ci(rest, "http://")) scheme_len = 7;
    const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    if (scheme_len == 0 || !boundary) {
      ++i;
      continue;
    }
    std::size_t end = i + scheme_len;
    while (end < text.size() && is_url_char(static_cast<unsigned char>(text[end]))) ++end;
    std::string_view url = text.substr(i, end - i);
    // Trim trailing sentence punctuation and closers without a matching opener.
    for (;;) {
      if (url.size() <= scheme_len) break;
      const char last = url.back();
      if (last == '.' || last == ',' || last == ';' || last == ':' || last == '!' || last == '?' || last == '*') {
        url.remove_suffix(1);
        continue;
      }
      if (last == ')') {
        const auto opens = std::count(url.begin(), url.end(), '(');
        const auto closes = std::count(url.begin(), url.end(), ')');
        if (closes > opens) {
          url.remove_suffix(1);
          continue;
        }
      }
      break;
    }
    if (url.size() > scheme_len) urls.emplace_back(url);
    i = end;
  }
  return urls;
}

std::string canonicalize_url(std::string_view url) {
  std::string_view rest = trim(url);
  if (starts_with_ci(rest, "https://")) rest.remove_prefix(8);
  else if (starts_with_ci(rest, "http://")) rest.remove_prefix(7);
  else if (rest.substr(0, 2) == "//") rest.remove_prefix(2);
  const std::size_t host_end = rest.find_first_of("/?#");
  std::string out = to_lower(rest.substr(0, host_end));
  if (host_end != std::string_view::npos) out += rest.substr(host_end);
  // Only a slash that ends the path (before any query or fragment) is stripped.
  const std::size_t path_end = out.find_first_of("?#");
  std::string tail = path_end == std::string::npos ? std::string() : out.substr(path_end);
  std::string head = path_end == std::string::npos ? out : out.substr(0, path_end);
  while (!head.empty() && head.back() == '/') head.pop_back();
  return head + tail;
}

Outcome extract_outcome(const RawTrialResult& raw, const TrialSpec& spec, const Corpus& corpus) {
  const Scenario& s = corpus.at(spec.scenario_id);
  Outcome o;
  o.trial_id = raw.trial_id;
  o.scenario_id = spec.scenario_id;
  o.factor_id = s.factor_id;
  o.model_id = spec.model_id;
  o.order = spec.order;
  o.paraphrase_index = spec.paraphrase_index;
  o.replicate = spec.replicate;

  const auto urls = find_urls(raw.answer_text);
  std::set<std::string> distinct;
  for (const auto& u : urls) distinct.insert(canonicalize_url(u));
  o.url_count = static_cast<int>(distinct.size());

  if (urls.empty()) {
    o.result = CitationResult::Excluded;
    o.exclusion_reason = ExclusionReason::NoUrl;
    return o;
  }
  const std::string first = canonicalize_url(urls.front());
  if (first == canonicalize_url(s.variant_a.url)) {
    o.result = CitationResult::AFirst;
  } else if (first == canonicalize_url(s.variant_b.url)) {
    o.result = CitationResult::BFirst;
  } else {
    o.result = CitationResult::Excluded;
    o.exclusion_reason = ExclusionReason::ForeignFirstUrl;
  }
  return o;
}

std::vector<Outcome> extract_outcomes_serial(const std::vector<RawTrialResult>& raws,
                                             const std::vector<TrialSpec>& specs, const Corpus& corpus) {
  if (raws.size() != specs.size()) throw std::invalid_argument("raws/specs size mismatch");
  std::vector<Outcome> out(raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) out[i] = extract_outcome(raws[i], specs[i], corpus);
  return out;
}

std::vector<Outcome> extract_outcomes_openmp(const std::vector<RawTrialResult>& raws,
                                             const std::vector<TrialSpec>& specs, const Corpus& corpus) {
  if (raws.size() != specs.size()) throw std::invalid_argument("raws/specs size mismatch");
  std::vector<Outcome> out(raws.size());
  const auto n = static_cast<std::ptrdiff_t>(raws.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = extract_outcome(raws[k], specs[k], corpus);
  }
  return out;
}

std::vector<Outcome> extract_plan(const std::vector<TrialSpec>& plan, const std::vector<RawTrialResult>& log,
                                  const Corpus& corpus, std::vector<std::string>* missing, Execution exec) {
  std::map<std::string_view, const RawTrialResult*> by_id;
  for (const auto& r : log) by_id.emplace(r.trial_id, &r);
  std::vector<RawTrialResult> raws;
  std::vector<TrialSpec> specs;
  raws.reserve(plan.size());
  specs.reserve(plan.size());
  for (const auto& t : plan) {
    auto it = by_id.find(t.trial_id);
    if (it == by_id.end()) {
      if (missing) missing->push_back(t.trial_id);
      continue;
    }
    raws.push_back(*it->second);
    specs.push_back(t);
  }
  return exec == Execution::Serial ? extract_outcomes_serial(raws, specs, corpus)
                                   : extract_outcomes_openmp(raws, specs, corpus);
}

UrlCountStats url_stats(const std::vector<Outcome>& outcomes) {
  UrlCountStats st;
  if (outcomes.empty()) return st;
  st.empty = false;
  st.total = outcomes.size();
  std::size_t one = 0, multi = 0, none = 0, excluded = 0;
  for (const auto& o : outcomes) {
    if (o.url_count == 0) ++none;
    else if (o.url_count == 1) ++one;
    else ++multi;
    if (o.result == CitationResult::Excluded) ++excluded;
  }
  const double n = static_cast<double>(st.total);
  st.one_url_share = static_cast<double>(one) / n;
  st.multi_url_share = static_cast<double>(multi) / n;
  st.no_url_share = static_cast<double>(none) / n;
  st.exclusion_share = static_cast<double>(excluded) / n;
  return st;
}

Json to_json(const Outcome& o) {
  return Json{{"trial_id", o.trial_id},
              {"result", to_string(o.result)},
              {"exclusion_reason", o.exclusion_reason ? Json(to_string(*o.exclusion_reason)) : Json(nullptr)},
              {"url_count", o.url_count},
              {"scenario_id", o.scenario_id},
              {"factor_id", o.factor_id},
              {"model_id", o.model_id},
              {"order", to_string(o.order)},
              {"paraphrase_index", o.paraphrase_index},
              {"replicate", o.replicate}};
}

Outcome outcome_from_json(const Json& j) {
  Outcome o;
  o.trial_id = j.at("trial_id").get<std::string>();
  const auto result = j.at("result").get<std::string>();
  if (result == "A_first") o.result = CitationResult::AFirst;
  else if (result == "B_first") o.result = CitationResult::BFirst;
  else if (result == "excluded") o.result = CitationResult::Excluded;
  else throw std::invalid_argument("unknown result \"" + result + "\"");
  const Json& reason = j.at("exclusion_reason");
  if (!reason.is_null()) {
    const auto r = reason.get<std::string>();
    if (r == "no_url") o.exclusion_reason = ExclusionReason::NoUrl;
    else if (r == "foreign_first_url") o.exclusion_reason = ExclusionReason::ForeignFirstUrl;
    else throw std::invalid_argument("unknown exclusion_reason \"" + r + "\"");
  }
  if ((o.result == CitationResult::Excluded) != o.exclusion_reason.has_value()) {
    throw std::invalid_argument("result=excluded must coincide with an exclusion_reason");
  }
  o.url_count = j.at("url_count").get<int>();
  o.scenario_id = j.at("scenario_id").get<std::string>();
  o.factor_id = j.at("factor_id").get<int>();
  o.model_id = j.at("model_id").get<std::string>();
  o.order = parse_order(j.at("order").get<std::string>());
  o.paraphrase_index = j.value("paraphrase_index", 0);
  o.replicate = j.value("replicate", 1);
  return o;
}

void save_outcomes(const std::vector<Outcome>& outcomes, const std::filesystem::path& path) {
  std::string out;
  for (const auto& o : outcomes) {
    out += to_json(o).dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<Outcome> load_outcomes(const std::filesystem::path& path) {
  std::vector<Outcome> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back(outcome_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw JsonlError(path, line, e.what());
    }
  });
  return out;
}

}  // namespace citepref
