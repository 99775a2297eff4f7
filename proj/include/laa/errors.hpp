#pragma once

#include <stdexcept>
#include <string>

namespace laa {

// Exit-code mapping used by the CLI: ParseError/ConfigError -> 2,
// everything else derived from DomainError -> 1.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TopologyError : DomainError {
  using DomainError::DomainError;
};

struct NumericError : DomainError {
  using DomainError::DomainError;
};

struct TrainingError : DomainError {
  using DomainError::DomainError;
};

}  // namespace laa
