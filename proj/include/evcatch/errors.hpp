#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evcatch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input data outside the declared sensor geometry or value domain.
struct BoundsError : Error {
  using Error::Error;
};

// Caller violated an operation precondition (e.g. horizon moved backwards).
struct ContractError : Error {
  using Error::Error;
};

// Malformed serialized input. Carries the byte/line offset of the failure.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset = 0;
};

struct UnderdeterminedError : Error {
  using Error::Error;
};

struct DegenerateFitError : Error {
  using Error::Error;
};

struct InfeasibleLaunchError : Error {
  using Error::Error;
};

struct NoImpactError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace evcatch
