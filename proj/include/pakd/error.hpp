#ifndef PAKD_ERROR_HPP
#define PAKD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pakd {

// All library errors carry a stable machine-readable code alongside the
// human-readable message, e.g. "UnbalancedBrackets".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace pakd

#endif
