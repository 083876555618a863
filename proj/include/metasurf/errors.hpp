#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metasurf {

// Invalid argument value (out-of-range tile id, wrong vector width, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller misused an API or the command line. The CLI maps this to exit code 2.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed serialized data. `offset` is the byte (or line) position where
// decoding stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metasurf
