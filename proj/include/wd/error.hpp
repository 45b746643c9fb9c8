#pragma once

#include <stdexcept>
#include <string>

namespace wd {

// Error taxonomy mirrored by the CLI exit codes: parse -> 2, domain -> 3,
// internal -> 5. Verification-negative outcomes are values, not exceptions.
enum class ErrKind {
  parse,
  domain,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrKind kind_;
  std::string code_;
};

inline Error parse_error(const std::string& what) {
  return Error(ErrKind::parse, "ParseError", what);
}

inline Error domain_error(std::string code, const std::string& what) {
  return Error(ErrKind::domain, std::move(code), what);
}

inline Error internal_error(std::string code, const std::string& what) {
  return Error(ErrKind::internal, std::move(code), what);
}

}  // namespace wd
