#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vantage {

enum class ErrorCode {
  invalid_argument,
  out_of_domain,
  degenerate_map,
  invalid_vantage,
  no_candidate,
  estimator_error,
  format_error,
  invalid_polygon,
  generation_failure,
  io_error,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI, bindings) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vantage
