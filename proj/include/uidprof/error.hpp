#pragma once

#include <stdexcept>
#include <string>

namespace uidprof {

// Bad configuration or unreadable/malformed input. The CLI maps this to exit 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input parsed but violates a data invariant. The CLI maps this to exit 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uidprof
