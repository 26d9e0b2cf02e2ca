#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tilecurate {

enum class ErrorKind {
  Config,        // bad configuration value or incompatible artifacts
  Contract,      // caller violated an operation precondition
  Source,        // slide or input image could not be read
  Io,            // filesystem failure while writing or reading artifacts
  Conflict,      // mutation clashes with existing curation state
  NotFound,      // unknown cluster, proposal, tile or class
  MissingStage,  // an upstream pipeline stage has not completed
  State,         // operation needs state that is not present (no project)
  Locked,        // another process holds the project lock
  NonFinite,     // numerical blow-up during training
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace tilecurate
