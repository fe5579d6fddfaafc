#pragma once

#include <stdexcept>
#include <string>

namespace dpdec {

enum class errc {
  disconnected,
  target_unreachable,
  not_regular,
  invalid_order,
  empty_curve,
  unsatisfiable,
  dimension_mismatch,
  singular,
  empty_class,
  bad_magic,
  count_mismatch,
  truncated_file,
  config_invalid,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::disconnected: return "DISCONNECTED";
    case errc::target_unreachable: return "TARGET_UNREACHABLE";
    case errc::not_regular: return "NOT_REGULAR";
    case errc::invalid_order: return "INVALID_ORDER";
    case errc::empty_curve: return "EMPTY_CURVE";
    case errc::unsatisfiable: return "UNSATISFIABLE";
    case errc::dimension_mismatch: return "DIMENSION_MISMATCH";
    case errc::singular: return "SINGULAR";
    case errc::empty_class: return "EMPTY_CLASS";
    case errc::bad_magic: return "BAD_MAGIC";
    case errc::count_mismatch: return "COUNT_MISMATCH";
    case errc::truncated_file: return "TRUNCATED_FILE";
    case errc::config_invalid: return "CONFIG_INVALID";
  }
  return "UNKNOWN";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

}  // namespace dpdec
