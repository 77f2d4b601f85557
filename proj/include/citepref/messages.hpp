#pragma once

#include <array>
#include <string>
#include <string_view>

#include "citepref/corpus.hpp"
#include "citepref/plan.hpp"

namespace citepref {

/// Fixed system prompt, bit-exact.
inline constexpr std::string_view kSystemPrompt =
    "You are a helpful assistant. You MUST use the web_search tool to find information before answering any "
    "query. Always cite the exact URLs from the search results in your response. Do not use any other sources "
    "or prior knowledge.";

inline constexpr std::string_view kSearchToolName = "web_search";

struct SearchResult {
  std::string title;
  std::string url;
  std::string body;
  bool operator==(const SearchResult&) const = default;
};

/// system, user, tool call, tool response, in that order.
struct MessageSequence {
  std::string system;
  std::string user;
  std::string tool_name;
  std::string tool_query;
  /// Entry 0 is variant A iff order == AB.
  std::array<SearchResult, 2> tool_response;

  bool operator==(const MessageSequence&) const = default;
};

/// Pure; throws std::out_of_range for an unknown scenario or paraphrase index.
MessageSequence build_messages(const TrialSpec& spec, const Corpus& corpus);

/// Tool-response payload as the model reads it.
std::string tool_response_text(const MessageSequence& m);

}  // namespace citepref
