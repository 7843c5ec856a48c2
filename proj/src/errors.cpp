#include "pgbias/errors.hpp"

namespace pgbias {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NonEpisodic: return "non_episodic";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace pgbias
