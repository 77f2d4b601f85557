#pragma once

#include <stdexcept>
#include <string>

#include "citepref/messages.hpp"
#include "citepref/plan.hpp"

namespace citepref {

/// What a backend may know about the trial beyond the messages. HTTP backends ignore it.
struct TrialContext {
  TrialSpec spec;
  int factor_id = 0;
};

struct Completion {
  std::string text;
  std::string meta;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind {
    Transient,  // transport failure, 5xx, 408/409/429
    Auth,       // 401/403 or missing credentials; never retried
    Permanent,  // other 4xx, malformed response
  };
  BackendError(Kind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

/// Safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  /// Throws BackendError.
  virtual Completion complete(const MessageSequence& messages, const TrialContext& context) = 0;
};

}  // namespace citepref
