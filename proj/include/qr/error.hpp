#pragma once

#include <stdexcept>
#include <string>

namespace qr {

// Raised for precondition violations, malformed inputs and numerical failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qr
