#pragma once

#include <stdexcept>
#include <string>

namespace aclr {

/// Base class for every error the library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition on an operation's inputs was violated.
struct ContractError : Error {
  using Error::Error;
};

/// Operand shapes do not satisfy an operation's contract.
struct DimensionError : ContractError {
  using ContractError::ContractError;
};

/// A vector that must have positive norm is numerically zero.
struct DegenerateVectorError : ContractError {
  using ContractError::ContractError;
};

/// An index (class label, node handle) is out of range.
struct IndexError : ContractError {
  using ContractError::ContractError;
};

/// A dataset or embedding file failed to parse or validate.
struct LoadError : Error {
  using Error::Error;
};

/// A post could not be embedded by the chosen provider.
struct EmbeddingError : Error {
  using Error::Error;
};

/// A class has too few events for the requested fold count.
struct StratificationError : Error {
  using Error::Error;
};

/// Invalid run or generator configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace aclr
