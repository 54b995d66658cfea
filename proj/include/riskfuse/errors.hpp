#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace riskfuse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Input document or domain object breaks a schema or semantic rule.
/// Carries the offending pedigree member id when one is known.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg, std::optional<int> member_id = std::nullopt);
  std::optional<int> member_id() const noexcept { return member_id_; }
  const char* kind() const noexcept override { return "validation"; }

 private:
  std::optional<int> member_id_;
};

/// Parameter tables are missing, malformed, or mutually inconsistent.
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};

/// A call made outside the support of the model (age, horizon, empty data).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Model eligibility violation (e.g. relative-hazard model for a known carrier).
class EligibilityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "eligibility"; }
};

/// Estimating-equation solver failed (separation, non-convergence, rank).
class FitError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "fit"; }
};

}  // namespace riskfuse
