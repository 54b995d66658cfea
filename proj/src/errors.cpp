#include "riskfuse/errors.hpp"

namespace riskfuse {

namespace {
std::string with_member(const std::string& msg, std::optional<int> id) {
  if (!id) return msg;
  return "member " + std::to_string(*id) + ": " + msg;
}
}  // namespace

ValidationError::ValidationError(const std::string& msg, std::optional<int> member_id)
    : Error(with_member(msg, member_id)), member_id_(member_id) {}

}  // namespace riskfuse
