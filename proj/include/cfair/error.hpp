#pragma once

#include <stdexcept>
#include <string>

namespace cfair {

// Bad user input: malformed files, invalid graphs, schema mismatches.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cfair
