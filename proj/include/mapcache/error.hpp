#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mapcache {

/// Dense identifier of a unit of reference (a prefix id or a synthetic unit).
using UnitId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input; `index()` is the 1-based line or record number.
class ParseError : public Error {
 public:
  ParseError(std::size_t index, const std::string& what)
      : Error("line " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Argument outside the domain where a model is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace mapcache
