#pragma once

#include <stdexcept>
#include <string>

namespace rvc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- power flow ---
class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& what) : Error(what) {}
};
class SingularJacobian : public Error {
 public:
  explicit SingularJacobian(const std::string& what) : Error(what) {}
};

// --- estimation ---
class SingularSystem : public Error {
 public:
  explicit SingularSystem(const std::string& what) : Error(what) {}
};
class NumericalBlowup : public Error {
 public:
  explicit NumericalBlowup(const std::string& what) : Error(what) {}
};
class EigenFailure : public Error {
 public:
  explicit EigenFailure(const std::string& what) : Error(what) {}
};

// --- control ---
class MissingEstimate : public Error {
 public:
  explicit MissingEstimate(const std::string& what) : Error(what) {}
};
class InconsistentDimensions : public Error {
 public:
  explicit InconsistentDimensions(const std::string& what) : Error(what) {}
};
class TooManyVertices : public Error {
 public:
  explicit TooManyVertices(const std::string& what) : Error(what) {}
};

// --- forecast ---
class StaleData : public Error {
 public:
  explicit StaleData(const std::string& what) : Error(what) {}
};

// --- metrics ---
class ZeroNormTruth : public Error {
 public:
  explicit ZeroNormTruth(const std::string& what) : Error(what) {}
};
class ZeroMax : public Error {
 public:
  explicit ZeroMax(const std::string& what) : Error(what) {}
};

// --- harness / io ---
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};
class ProfileGap : public Error {
 public:
  explicit ProfileGap(const std::string& what) : Error(what) {}
};
class PowerFlowDiverged : public Error {
 public:
  explicit PowerFlowDiverged(const std::string& what) : Error(what) {}
};
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

// --- telemetry ---
class SocketError : public Error {
 public:
  explicit SocketError(const std::string& what) : Error(what) {}
};

}  // namespace rvc
