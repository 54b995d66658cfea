#pragma once

#include <string>
#include <vector>

#include "riskfuse/errors.hpp"
#include "riskfuse/json_io.hpp"
#include "riskfuse/params.hpp"
#include "riskfuse/scoring.hpp"

namespace riskfuse {

inline constexpr int kServiceSchemaVersion = 1;

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON, numbers with 17 significant digits
};

/// One scoring request: the pedigree, risk factors and horizons, optionally
/// restricted to named models.
struct ScoreRequest {
  json pedigree;
  json risk_factors;
  std::optional<int> age;
  std::vector<int> taus;
  std::vector<std::string> models;  // empty = every available model
};

/// Field-level problem in a request payload.
struct FieldIssue {
  std::string path;
  std::string message;
  std::optional<int> member_id;
};

class RequestError : public ValidationError {
 public:
  explicit RequestError(std::vector<FieldIssue> issues);
  const std::vector<FieldIssue>& issues() const { return issues_; }

 private:
  std::vector<FieldIssue> issues_;
};

ScoreRequest parse_score_request(const json& body);

/// Stateless request handling over an immutable parameter set; safe to call
/// from concurrent threads.
class ScoringService {
 public:
  ScoringService(const ParameterSet& params, std::vector<ModelSpec> extra_models = {});

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  ServiceResponse health() const;
  ServiceResponse models() const;
  ServiceResponse score(const std::string& body) const;
  ServiceResponse whatif(const std::string& body) const;

  /// Body of a /score response. Throws RequestError on invalid input;
  /// ineligible (model, tau) pairs are listed under "ineligible".
  json score_json(const ScoreRequest& request) const;

  const std::vector<ModelSpec>& available_models() const { return models_; }

 private:
  const ParameterSet& params_;
  Scorer scorer_;
  std::vector<ModelSpec> models_;
};

/// Blocks serving the HTTP endpoints until the process is stopped.
void run_server(const ScoringService& service, const std::string& host, int port);

}  // namespace riskfuse
