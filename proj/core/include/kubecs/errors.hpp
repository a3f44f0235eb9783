#pragma once

#include <stdexcept>
#include <string>

namespace kubecs {

// Shape or precondition violations raised by the numerical layers.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent external data (files, bundles, configs).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kubecs
