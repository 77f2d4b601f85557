#include "citepref/messages.hpp"

#include <stdexcept>

namespace citepref {

MessageSequence build_messages(const TrialSpec& spec, const Corpus& corpus) {
  const Scenario& s = corpus.at(spec.scenario_id);
  if (spec.paraphrase_index < 0 || spec.paraphrase_index >= static_cast<int>(s.queries.size())) {
    throw std::out_of_range("paraphrase_index " + std::to_string(spec.paraphrase_index) + " out of range for " +
                            s.scenario_id);
  }
  MessageSequence m;
  m.system = std::string(kSystemPrompt);
  m.user = s.queries[static_cast<std::size_t>(spec.paraphrase_index)];
  m.tool_name = std::string(kSearchToolName);
  m.tool_query = s.tool_query;
  const SearchResult a{s.variant_a.title, s.variant_a.url, s.variant_a.body};
  const SearchResult b{s.variant_b.title, s.variant_b.url, s.variant_b.body};
  m.tool_response = spec.order == Order::AB ? std::array{a, b} : std::array{b, a};
  return m;
}

std::string tool_response_text(const MessageSequence& m) {
  Json results = Json::array();
  for (const auto& r : m.tool_response) {
    results.push_back({{"title", r.title}, {"url", r.url}, {"content", r.body}});
  }
  return Json{{"results", results}}.dump();
}

}  // namespace citepref
