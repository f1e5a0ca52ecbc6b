#pragma once

#include <stdexcept>

namespace tgnn {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not line up (matmul inner dims, elementwise ops).
struct DimensionError : Error {
  using Error::Error;
};

// Argument outside an operation's domain (empty softmax input, non-scalar
// backward seed, labels outside {0,1}, non-finite pixels).
struct DomainError : Error {
  using Error::Error;
};

// Invalid configuration: malformed config file, bad generator spec, head
// count not dividing the embedding dimension.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent data files (dataset records, images, checkpoints,
// missing soft labels).
struct DataError : Error {
  using Error::Error;
};

// Optimizer state problems, e.g. stepping a parameter without a gradient.
struct StateError : Error {
  using Error::Error;
};

// grad_check precondition violations (non-deterministic function under test).
struct VerificationError : Error {
  using Error::Error;
};

// Non-finite values where finite math is required: overflow in a forward op,
// diverging training loss.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace tgnn
