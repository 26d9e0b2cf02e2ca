#include "common/error.hpp"

namespace tilecurate {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Source: return "source error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::NotFound: return "not found";
    case ErrorKind::MissingStage: return "missing upstream stage";
    case ErrorKind::State: return "state error";
    case ErrorKind::Locked: return "project locked";
    case ErrorKind::NonFinite: return "non-finite value";
  }
  return "error";
}

}  // namespace tilecurate
