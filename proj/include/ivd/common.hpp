#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ivd {

using UserId = int;
using ItemId = int;
using GroupId = int;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed files or values that violate the ratings contract.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing or inconsistent persisted state (checkpoints, detector state).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Not enough items (or ratings) satisfy a target-selection constraint.
class EligibilityError : public Error {
 public:
  using Error::Error;
};

/// Independent random streams fanned out from one master seed.
///
/// Every component that draws random numbers takes its seed from
/// `derive_seed(master, stream, index)`, so any single stage can be replayed
/// in isolation given the master seed and the stream/index pair.
enum class SeedStream : std::uint64_t {
  training = 1,
  clustering = 2,
  targets = 3,
  reference = 4,
  attack = 5,
  genuine = 6,
  trial = 7,
  fillers = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream,
                                    std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

}  // namespace ivd
