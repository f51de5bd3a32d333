#pragma once

#include <stdexcept>
#include <string>

namespace tasep {

enum class Errc {
  invalid_argument,
  index_out_of_range,
  too_large,
  invalid_rate,
  degenerate_window,
  window_violation,
  unsorted_times,
  length_mismatch,
  negative_time,
  singular,
  dimension_mismatch,
  insufficient_data,
  parse_error,
  not_settled,
};

const char* to_string(Errc code) noexcept;

/// Every precondition failure in the library surfaces as this exception.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tasep
