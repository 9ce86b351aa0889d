#pragma once

#include <stdexcept>
#include <string>

namespace ramp {

// All recoverable failures (bad input, malformed files, shape mismatches)
// surface as Error; programming bugs stay asserts.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed serialized data; offset is the byte position of the offending field.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

}  // namespace ramp
