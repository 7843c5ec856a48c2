#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgbias {

enum class ErrorKind {
  InvalidArgument,
  Domain,
  NonEpisodic,
  Singular,
  NonFinite,
  Unsupported,
  EmptyInput,
  Degenerate,
  Divergence,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. `kind()` is what the CLI reports
/// in its machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace pgbias
