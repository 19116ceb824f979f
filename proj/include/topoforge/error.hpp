#pragma once

#include <stdexcept>
#include <string>

namespace topoforge {

/// Input does not conform to a file schema or a type invariant.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A lifting refused to run (e.g. the neighborhood blow-up guard).
class LiftingRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value or combination is invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during training or evaluation (non-finite loss or gradient).
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topoforge
