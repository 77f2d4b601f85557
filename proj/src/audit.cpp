#include "citepref/audit.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "citepref/extract.hpp"

namespace citepref {

std::string_view to_string(Route r) {
  switch (r) {
    case Route::BrandIsTop: return "brand_is_top";
    case Route::FixContent: return "fix_content";
    case Route::ImproveSeo: return "improve_seo";
  }
  return "?";
}

std::string_view to_string(AuditCategory c) {
  switch (c) {
    case AuditCategory::Trust: return "Trust";
    case AuditCategory::Completeness: return "Completeness";
    case AuditCategory::Relevance: return "Relevance";
    case AuditCategory::Context: return "Context";
  }
  return "?";
}

void BrandProfile::validate() const {
  if (names.empty() && domains.empty()) throw std::invalid_argument("brand profile needs a name or a domain");
}

namespace {

const std::vector<std::string>& month_names() {
  static const std::vector<std::string> names = {"january", "february", "march",     "april",   "may",      "june",
                                                 "july",    "august",   "september", "october", "november", "december"};
  return names;
}

int month_index(std::string_view word) {
  const auto lower = to_lower(word);
  const auto& names = month_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (lower == names[i] || (lower.size() == 3 && names[i].compare(0, 3, lower) == 0)) return static_cast<int>(i) + 1;
  }
  return 0;
}

bool valid_date(const CalendarDate& d) {
  static constexpr int days[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return d.year >= 1900 && d.year <= 2200 && d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days[d.month - 1];
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "an",   "the",  "and",   "or",    "of",     "to",    "in",     "on",   "for",  "with",  "is",
      "are",   "be",   "it",   "its",   "this",  "that",   "what",  "which",  "who",  "how",  "best",  "top",
      "buy",   "i",    "me",   "my",    "we",    "you",    "your",  "should", "get",  "one",  "right", "now",
      "would", "do",   "does", "can",   "at",    "by",     "from",  "as",     "most", "good", "some",  "any",
      "recommend", "shopping", "looking", "want", "need", "t", "s", "there", "than", "more", "about"};
  return words;
}

std::string stem(std::string w) {
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
  return w;
}

std::vector<std::string> content_terms(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : word_tokens(text)) {
    if (!stopwords().contains(t)) out.push_back(stem(std::move(t)));
  }
  return out;
}

std::string snippet(std::string_view s) {
  auto t = std::string(trim(s));
  if (utf8_length(t) > 160) {
    std::size_t cut = 157;
    while (cut > 0 && (static_cast<unsigned char>(t[cut]) & 0xC0) == 0x80) --cut;
    t = t.substr(0, cut) + "...";
  }
  return t;
}

std::optional<std::string> first_sentence_matching(std::string_view text, const std::regex& re) {
  for (const auto& s : split_sentences(text)) {
    if (std::regex_search(s, re)) return s;
  }
  return std::nullopt;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

const std::regex& key_value_re() {
  static const std::regex re(R"(^\s*(?:[-*]\s*)?(?:\*\*)?([A-Za-z][A-Za-z0-9 /()&-]{0,39}?)(?:\*\*)?\s*:\s*(?:\*\*)?\s*(\S.*)$)");
  return re;
}

const std::regex& table_row_re() {
  static const std::regex re(R"(^\s*\|\s*([^|]+?)\s*\|\s*([^|]+?)\s*\|)");
  return re;
}

struct KeyValue {
  std::string key;
  std::string value;
};

std::vector<KeyValue> key_values(std::string_view text) {
  std::vector<KeyValue> out;
  for (const auto& line : lines_of(text)) {
    std::smatch m;
    if (std::regex_search(line, m, key_value_re()) || std::regex_search(line, m, table_row_re())) {
      auto key = to_lower(trim(m[1].str()));
      auto value = to_lower(trim(m[2].str()));
      if (key.empty() || value.empty() || key.find("---") != std::string::npos) continue;
      if (key == "http" || key == "https") continue;
      out.push_back({key, value});
    }
  }
  return out;
}

int count_matches(const std::string& text, const std::regex& re) {
  return static_cast<int>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

double query_coverage(std::string_view page, std::string_view query, std::vector<std::string>& missing,
                      std::vector<std::string>& terms) {
  std::set<std::string> q;
  for (auto& t : content_terms(query)) {
    if (q.insert(t).second) terms.push_back(t);
  }
  if (terms.empty()) return 1.0;
  std::set<std::string> have;
  for (auto& t : content_terms(page)) have.insert(std::move(t));
  int covered = 0;
  for (const auto& t : terms) {
    if (have.contains(t)) ++covered;
    else missing.push_back(t);
  }
  return static_cast<double>(covered) / static_cast<double>(terms.size());
}

std::string join(const std::vector<std::string>& v, std::string_view sep = ", ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

int section_count(std::string_view text) {
  static const std::regex heading(R"(^\s*(#{1,6}\s+\S|<h[1-6]))");
  int headings = 0;
  int paragraphs = 0;
  bool in_paragraph = false;
  for (const auto& line : lines_of(text)) {
    if (std::regex_search(line, heading)) ++headings;
    const bool blank = trim(line).empty();
    if (!blank && !in_paragraph) ++paragraphs;
    in_paragraph = !blank;
  }
  return headings > 0 ? headings : paragraphs;
}

const std::set<std::string>& negations() {
  static const std::set<std::string> words = {"not",   "no",   "never", "doesn", "isn",  "don",  "cannot",
                                              "won",   "lacks", "lack", "without", "wasn", "aren", "didn", "none"};
  return words;
}

std::string host_of(const std::string& canonical) {
  auto end = canonical.find_first_of("/?#");
  auto host = canonical.substr(0, end);
  if (auto at = host.rfind('@'); at != std::string::npos) host = host.substr(at + 1);
  if (auto colon = host.find(':'); colon != std::string::npos) host = host.substr(0, colon);
  if (host.rfind("www.", 0) == 0) host = host.substr(4);
  return host;
}

std::string normalize_domain(std::string_view d) {
  auto c = canonicalize_url(trim(d));
  return host_of(c);
}

bool host_matches(const std::string& host, const BrandProfile& brand) {
  for (const auto& d : brand.domains) {
    const auto nd = normalize_domain(d);
    if (nd.empty()) continue;
    if (host == nd || (host.size() > nd.size() && host.ends_with("." + nd))) return true;
  }
  return false;
}

bool mentions_brand(std::string_view text, const BrandProfile& brand) {
  for (const auto& n : brand.names) {
    if (!trim(n).empty() && find_word_ci(text, trim(n)) != std::string_view::npos) return true;
  }
  for (const auto& url : find_urls(text)) {
    if (host_matches(host_of(canonicalize_url(url)), brand)) return true;
  }
  return false;
}

Finding make_finding(int factor_id, std::string evidence, double score, const AuditSettings& settings) {
  Finding f;
  f.factor_id = factor_id;
  f.factor = std::string(find_factor(factor_id)->name);
  f.category = audit_category(factor_id);
  f.evidence = std::move(evidence);
  f.score = std::clamp(score, 0.0, 1.0);
  const auto it = settings.weights.find(factor_id);
  if (it != settings.weights.end()) {
    f.weight = it->second;
  } else {
    const auto defaults = default_priority_weights();
    f.weight = defaults.at(factor_id);
  }
  return f;
}

std::string recommendation_for(int factor_id) {
  switch (factor_id) {
    case 1: return "Rewrite the page around the query topic and surface the core topic terms early.";
    case 2: return "Work the missing query terms into headings and the opening paragraph.";
    case 3: return "State a concrete price (currency and amount) on the page.";
    case 4: return "Add a specification list or table with measurable key specs.";
    case 5: return "Add a comparison against named alternatives.";
    case 6: return "Replace hedged wording with direct, confident statements.";
    case 7: return "Back each claim with tests, measurements or sources.";
    case 8: return "Resolve statements and values that contradict each other.";
    case 13: return "Expand coverage: more depth and clearly separated sections.";
    case 15: return "The page is cited but not first; strengthen the gatekeeper factors to move up the citation list.";
    case 16: return "Update the page and show a current publication or update date.";
    default: return "Review this factor.";
  }
}

}  // namespace

std::optional<CalendarDate> parse_iso_date(std::string_view s) {
  static const std::regex re(R"(^(\d{4})-(\d{2})-(\d{2})$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(s.begin(), s.end(), m, re)) return std::nullopt;
  CalendarDate d{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str())};
  if (!valid_date(d)) return std::nullopt;
  return d;
}

std::vector<CalendarDate> find_dates(std::string_view text) {
  static const std::regex iso(R"(\b(\d{4})-(\d{2})-(\d{2})\b)");
  static const std::regex mdy(R"(\b([A-Za-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})\b)");
  static const std::regex dmy(R"(\b(\d{1,2})(?:st|nd|rd|th)?\s+([A-Za-z]{3,9})\.?,?\s+(\d{4})\b)");
  static const std::regex my(R"(\b([A-Za-z]{3,9})\.?,?\s+(\d{4})\b)");
  const std::string s(text);
  std::vector<CalendarDate> out;
  // Patterns run from most to least specific; a match inside an earlier one
  // ("March 2024" within "12 March 2024") is skipped.
  std::vector<bool> taken(s.size(), false);
  auto scan = [&](const std::regex& re, auto&& to_date) {
    for (std::sregex_iterator it(s.begin(), s.end(), re), end; it != end; ++it) {
      const auto pos = static_cast<std::size_t>(it->position(0));
      const auto len = static_cast<std::size_t>(it->length(0));
      if (std::any_of(taken.begin() + pos, taken.begin() + pos + len, [](bool b) { return b; })) continue;
      const std::optional<CalendarDate> d = to_date(*it);
      if (!d || !valid_date(*d)) continue;
      out.push_back(*d);
      std::fill(taken.begin() + pos, taken.begin() + pos + len, true);
    }
  };
  scan(iso, [](const std::smatch& m) -> std::optional<CalendarDate> {
    return CalendarDate{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str())};
  });
  scan(mdy, [](const std::smatch& m) -> std::optional<CalendarDate> {
    if (int mo = month_index(m[1].str())) return CalendarDate{std::stoi(m[3].str()), mo, std::stoi(m[2].str())};
    return std::nullopt;
  });
  scan(dmy, [](const std::smatch& m) -> std::optional<CalendarDate> {
    if (int mo = month_index(m[2].str())) return CalendarDate{std::stoi(m[3].str()), mo, std::stoi(m[1].str())};
    return std::nullopt;
  });
  scan(my, [](const std::smatch& m) -> std::optional<CalendarDate> {
    if (int mo = month_index(m[1].str())) return CalendarDate{std::stoi(m[2].str()), mo, 1};
    return std::nullopt;
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int months_between(const CalendarDate& from, const CalendarDate& to) {
  int months = (to.year - from.year) * 12 + (to.month - from.month);
  if (months > 0 && to.day < from.day) --months;
  if (months < 0 && to.day > from.day) ++months;
  return months;
}

const std::vector<int>& consensus_factor_ids() {
  static const std::vector<int> ids = {1, 2, 3, 4, 5, 6, 7, 8, 13, 15, 16};
  return ids;
}

AuditCategory audit_category(int factor_id) {
  switch (factor_id) {
    case 1:
    case 2: return AuditCategory::Relevance;
    case 3:
    case 4:
    case 13: return AuditCategory::Completeness;
    case 6:
    case 7:
    case 8: return AuditCategory::Trust;
    case 5:
    case 15:
    case 16: return AuditCategory::Context;
    default: throw std::invalid_argument("factor " + std::to_string(factor_id) + " is not audited");
  }
}

std::map<int, double> default_priority_weights() {
  // Cross-model median odds ratios of the six-model results table (>10k counted as 10,000).
  static const std::map<int, double> medians = {{1, 10000.0}, {2, 15.4},   {3, 33.25},  {4, 126.7},
                                                {5, 3.345},   {6, 8.02},   {7, 6.955},  {8, 2.765},
                                                {13, 75.75},  {15, 10000.0}, {16, 5747.0}};
  std::map<int, double> out;
  for (const auto& [id, m] : medians) out[id] = std::log(m);
  return out;
}

std::map<int, double> priority_weights_from_fits(const std::vector<fit::GroupFit>& fits, double cap) {
  auto out = default_priority_weights();
  std::map<int, std::vector<double>> by_factor;
  for (const auto& g : fits) {
    if (g.status != fit::GroupStatus::Fitted || !g.fit) continue;
    const double orv = g.fit->flags.separation ? (g.fit->odds_ratio >= 1.0 ? cap : 1.0 / cap) : g.fit->odds_ratio;
    if (!(orv > 0.0) || !std::isfinite(orv)) continue;
    by_factor[g.key.factor_id].push_back(std::clamp(orv, 1.0 / cap, cap));
  }
  for (auto& [id, values] : by_factor) {
    if (!out.contains(id) || values.empty()) continue;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    out[id] = std::log(median);
  }
  return out;
}

std::optional<Finding> detect_factor(int factor_id, const PageContent& page, std::string_view query,
                                     const AuditSettings& settings) {
  const auto& ids = consensus_factor_ids();
  if (std::find(ids.begin(), ids.end(), factor_id) == ids.end()) {
    throw std::invalid_argument("factor " + std::to_string(factor_id) + " is not one of the audited factors");
  }
  const std::string& text = page.text;
  switch (factor_id) {
    case 1:
    case 2: {
      std::vector<std::string> missing, terms;
      const double coverage = query_coverage(text, query, missing, terms);
      const std::string evidence = "page covers " + std::to_string(terms.size() - missing.size()) + " of " +
                                   std::to_string(terms.size()) + " query terms; missing: " + join(missing);
      if (factor_id == 1 && coverage < settings.topic_mismatch_coverage) {
        return make_finding(1, evidence, 1.0 - coverage, settings);
      }
      if (factor_id == 2 && coverage >= settings.topic_mismatch_coverage && coverage < settings.keyword_gap_coverage) {
        return make_finding(2, evidence, 1.0 - coverage, settings);
      }
      return std::nullopt;
    }
    case 3: {
      static const std::regex currency(
          R"(([$€£¥]\s?\d)|(\b\d[\d,]*(\.\d+)?\s?(usd|eur|gbp|dollars?|euros?|pounds?)\b))", std::regex::icase);
      if (std::regex_search(text, currency)) return std::nullopt;
      static const std::regex pricing(R"(\b(price|pricing|priced|cost|costs)\b)", std::regex::icase);
      const auto s = first_sentence_matching(text, pricing);
      return make_finding(3, s ? "no price stated: \"" + snippet(*s) + "\"" : "no currency amount anywhere on the page",
                          1.0, settings);
    }
    case 4: {
      static const std::regex unit(
          R"(\b\d+(\.\d+)?\s?(mm|cm|m|km|kg|g|lb|lbs|oz|mah|wh|w|kw|v|hz|khz|mhz|ghz|gb|tb|mb|inch|inches|in|h|hr|hrs|hours?|days?|min|mph|kph|db|l|ml|rpm|pa|lumens|mp|fps|bar|psi|nits|cores?)\b)",
          std::regex::icase);
      const int pairs = static_cast<int>(key_values(text).size());
      const int units = count_matches(text, unit);
      if (pairs >= settings.min_spec_pairs || units >= settings.min_spec_pairs) return std::nullopt;
      return make_finding(4,
                          "only " + std::to_string(pairs) + " key:value spec lines and " + std::to_string(units) +
                              " measured values",
                          1.0 - static_cast<double>(std::max(pairs, units)) / settings.min_spec_pairs, settings);
    }
    case 5: {
      static const std::regex comparison(
          R"(\b(compared (to|with)|versus|vs\.?|unlike|outperforms?|in comparison|alternatives?|competitors?|rivals?|\w+er than|more \w+ than|less \w+ than)\b)",
          std::regex::icase);
      if (std::regex_search(text, comparison)) return std::nullopt;
      return make_finding(5, "no comparison with alternatives", 1.0, settings);
    }
    case 6: {
      const auto words = word_tokens(text);
      if (words.empty()) return std::nullopt;
      int hedges = 0;
      std::string first;
      for (const auto& phrase : settings.hedge_lexicon) {
        std::string_view rest = text;
        while (true) {
          const auto pos = find_word_ci(rest, phrase);
          if (pos == std::string_view::npos) break;
          ++hedges;
          rest = rest.substr(pos + phrase.size());
        }
      }
      const double density = static_cast<double>(hedges) / static_cast<double>(words.size());
      if (density <= settings.hedge_density) return std::nullopt;
      for (const auto& s : split_sentences(text)) {
        bool hit = false;
        for (const auto& phrase : settings.hedge_lexicon) hit = hit || find_word_ci(s, phrase) != std::string_view::npos;
        if (hit) {
          first = s;
          break;
        }
      }
      std::ostringstream ev;
      ev << hedges << " hedges in " << words.size() << " words: \"" << snippet(first) << "\"";
      return make_finding(6, ev.str(), std::min(1.0, density / (2.0 * settings.hedge_density)), settings);
    }
    case 7: {
      static const std::regex claim(
          R"(\b(best|leading|top-rated|fastest|superior|unmatched|unbeatable|revolutionary|world-class|industry-leading|guaranteed|proven|most advanced|number one|#1)\b)",
          std::regex::icase);
      static const std::regex support(
          R"(\b(according to|tested|testing|study|studies|survey|measured|lab|laboratory|certified|benchmark\w*|independent|reviewed by|source|data shows?|\d+(\.\d+)?\s?%))",
          std::regex::icase);
      const auto s = first_sentence_matching(text, claim);
      if (!s || std::regex_search(text, support)) return std::nullopt;
      return make_finding(7, "claim without support: \"" + snippet(*s) + "\"", 1.0, settings);
    }
    case 8: {
      std::map<std::string, std::string> seen;
      for (const auto& kv : key_values(text)) {
        auto [it, inserted] = seen.emplace(kv.key, kv.value);
        if (!inserted && it->second != kv.value) {
          return make_finding(8, "\"" + kv.key + "\" given as both \"" + it->second + "\" and \"" + kv.value + "\"",
                              1.0, settings);
        }
      }
      struct Stmt {
        std::string text;
        std::set<std::string> terms;
        bool negated = false;
      };
      std::vector<Stmt> stmts;
      for (const auto& s : split_sentences(text)) {
        Stmt st{s, {}, false};
        for (auto& t : word_tokens(s)) {
          if (negations().contains(t)) st.negated = true;
          else if (!stopwords().contains(t)) st.terms.insert(stem(t));
        }
        if (st.terms.size() >= 3) stmts.push_back(std::move(st));
      }
      for (std::size_t i = 0; i < stmts.size(); ++i) {
        for (std::size_t j = i + 1; j < stmts.size(); ++j) {
          if (stmts[i].negated == stmts[j].negated) continue;
          std::size_t common = 0;
          for (const auto& t : stmts[i].terms) common += stmts[j].terms.count(t);
          const double jaccard =
              static_cast<double>(common) / static_cast<double>(stmts[i].terms.size() + stmts[j].terms.size() - common);
          if (jaccard >= 0.6) {
            return make_finding(8, "\"" + snippet(stmts[i].text) + "\" vs \"" + snippet(stmts[j].text) + "\"", jaccard,
                                settings);
          }
        }
      }
      return std::nullopt;
    }
    case 13: {
      const auto words = static_cast<int>(word_tokens(text).size());
      const int sections = section_count(text);
      if (words >= settings.min_words && sections >= settings.min_sections) return std::nullopt;
      const double depth = std::min(static_cast<double>(words) / settings.min_words,
                                    static_cast<double>(sections) / settings.min_sections);
      return make_finding(13, std::to_string(words) + " words in " + std::to_string(sections) + " sections", 1.0 - depth,
                          settings);
    }
    case 15: {
      if (!page.citation_rank || *page.citation_rank <= 1) return std::nullopt;
      return make_finding(15, "page is cited at position " + std::to_string(*page.citation_rank), 1.0, settings);
    }
    case 16: {
      auto dates = find_dates(text);
      if (page.published) dates.push_back(*page.published);
      std::optional<CalendarDate> latest;
      for (const auto& d : dates) {
        if (d <= settings.reference_date && (!latest || *latest < d)) latest = d;
      }
      if (!latest) return make_finding(16, "no publication or update date found", 0.5, settings);
      const int age = months_between(*latest, settings.reference_date);
      if (age <= settings.freshness_months) return std::nullopt;
      std::ostringstream ev;
      ev << "latest date " << latest->year << '-' << (latest->month < 10 ? "0" : "") << latest->month << '-'
         << (latest->day < 10 ? "0" : "") << latest->day << " is " << age << " months old";
      return make_finding(16, ev.str(), std::min(1.0, static_cast<double>(age) / (4.0 * settings.freshness_months)),
                          settings);
    }
    default: return std::nullopt;
  }
}

TopPick detect_top_pick(std::string_view answer, const BrandProfile& brand) {
  static const std::regex first_item(R"(^\s*(?:1[.)]|#1\b|\*\*1[.)])\s*(.*)$)");
  for (const auto& line : lines_of(answer)) {
    std::smatch m;
    if (std::regex_search(line, m, first_item)) {
      return {mentions_brand(line, brand), std::string(trim(line)), 0.95};
    }
  }
  static const std::regex cue(
      R"(\b(best|top pick|top choice|recommend\w*|our pick|winner|go with|first choice|number one|stands? out|editor'?s choice|ideal choice|clear choice)\b)",
      std::regex::icase);
  static const std::regex contrast(R"(\b(but|however|although|unlike|instead of|rather than|while)\b)", std::regex::icase);
  if (const auto s = first_sentence_matching(answer, cue)) {
    const bool named = mentions_brand(*s, brand);
    const double confidence = named && std::regex_search(*s, contrast) ? 0.6 : 0.85;
    return {named, *s, confidence};
  }
  const auto sentences = split_sentences(answer);
  if (sentences.empty()) return {false, "", 0.0};
  return {mentions_brand(sentences.front(), brand), sentences.front(), 0.5};
}

AuditReport audit(std::string_view answer, const BrandProfile& brand, const PageContent& page, std::string_view query,
                  const AuditSettings& settings) {
  if (trim(answer).empty()) throw std::invalid_argument("answer text is empty");
  if (trim(page.text).empty()) throw std::invalid_argument("page text is empty");
  brand.validate();

  AuditReport r;
  std::set<std::string> seen;
  for (const auto& url : find_urls(answer)) {
    const auto c = canonicalize_url(url);
    if (seen.insert(c).second) r.cited_urls.push_back(url);
  }
  for (std::size_t i = 0; i < r.cited_urls.size(); ++i) {
    if (host_matches(host_of(canonicalize_url(r.cited_urls[i])), brand)) {
      r.cited = true;
      r.citation_rank = static_cast<int>(i) + 1;
      break;
    }
  }
  r.top_pick = detect_top_pick(answer, brand);
  r.low_confidence = r.top_pick.confidence < settings.low_confidence;

  if (r.top_pick.brand_is_top) {
    r.route = Route::BrandIsTop;
    r.recommendations.push_back("The brand is already the top recommendation; re-check after content or model updates.");
    return r;
  }
  if (!r.cited) {
    r.route = Route::ImproveSeo;
    r.recommendations.push_back(
        "The brand's content is not among the cited sources, so retrieval is the bottleneck: improve SEO before editing "
        "content.");
    return r;
  }
  r.route = Route::FixContent;
  PageContent scored = page;
  if (!scored.citation_rank) scored.citation_rank = r.citation_rank;
  for (int id : consensus_factor_ids()) {
    if (auto f = detect_factor(id, scored, query, settings)) r.weak_factors.push_back(std::move(*f));
  }
  std::stable_sort(r.weak_factors.begin(), r.weak_factors.end(),
                   [](const Finding& a, const Finding& b) { return a.weight > b.weight; });
  for (const auto& f : r.weak_factors) r.recommendations.push_back(f.factor + ": " + recommendation_for(f.factor_id));
  if (r.weak_factors.empty()) {
    r.recommendations.push_back("No rule-based weakness found; compare against the page cited first.");
  }
  return r;
}

Json to_json(const AuditReport& r) {
  Json j;
  j["route"] = std::string(to_string(r.route));
  j["cited"] = r.cited;
  j["citation_rank"] = r.citation_rank ? Json(*r.citation_rank) : Json(nullptr);
  j["cited_urls"] = r.cited_urls;
  j["top_pick"] = {{"brand_is_top", r.top_pick.brand_is_top},
                   {"sentence", r.top_pick.sentence},
                   {"confidence", r.top_pick.confidence}};
  j["low_confidence"] = r.low_confidence;
  Json weak = Json::array();
  for (const auto& f : r.weak_factors) {
    weak.push_back({{"factor_id", f.factor_id},
                    {"factor", f.factor},
                    {"category", std::string(to_string(f.category))},
                    {"evidence", f.evidence},
                    {"score", f.score},
                    {"weight", f.weight}});
  }
  j["weak_factors"] = weak;
  j["recommendations"] = r.recommendations;
  return j;
}

std::string format_audit(const AuditReport& r) {
  std::ostringstream out;
  out << "Route: " << to_string(r.route) << '\n';
  out << "Brand cited: " << (r.cited ? "yes" : "no");
  if (r.citation_rank) out << " (position " << *r.citation_rank << " of " << r.cited_urls.size() << ")";
  out << '\n';
  out << "Top pick: " << (r.top_pick.brand_is_top ? "brand" : "other") << " (confidence " << r.top_pick.confidence
      << (r.low_confidence ? ", LOW" : "") << ")\n";
  if (!r.top_pick.sentence.empty()) out << "  \"" << snippet(r.top_pick.sentence) << "\"\n";
  if (!r.weak_factors.empty()) {
    out << "Issues detected (highest priority first):\n";
    for (std::size_t i = 0; i < r.weak_factors.size(); ++i) {
      const auto& f = r.weak_factors[i];
      char weight[32];
      std::snprintf(weight, sizeof weight, "%.2f", f.weight);
      out << "  " << i + 1 << ". " << f.factor << " [" << to_string(f.category) << ", weight " << weight
          << "]: " << f.evidence << '\n';
    }
  }
  out << "Recommendations:\n";
  for (const auto& rec : r.recommendations) out << "  - " << rec << '\n';
  return out.str();
}

}  // namespace citepref
