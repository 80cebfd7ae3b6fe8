#pragma once

#include <stdexcept>
#include <string>

namespace costcast {

/// Malformed input file (JSON or CSV).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parses but violates a domain invariant. The message names the field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dispatch problem has no feasible point. `hour()` is the 0-based hour
/// whose constraints could not be met, or -1 when it cannot be attributed.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int hour = -1)
      : std::runtime_error(what), hour_(hour) {}
  int hour() const { return hour_; }

 private:
  int hour_;
};

/// Training diverged or produced non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command-line usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced file does not exist.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace costcast
