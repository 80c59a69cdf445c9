#include "lndev/error.hpp"

namespace lndev {

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
  std::string msg;
  for (const auto& d : diags) {
    if (!msg.empty()) msg += "\n";
    msg += "line " + std::to_string(d.line) + ": " + d.field + ": " + d.reason;
  }
  return msg.empty() ? "parse error" : msg;
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diags)
    : Error(summarize(diags)), diags_(std::move(diags)) {}

}  // namespace lndev
