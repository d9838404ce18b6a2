#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kibitz {

// Root of every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::string expected, std::string detail = {});

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class MalformedCoordinate : public Error {
 public:
  using Error::Error;
};

// Engine protocol failures. The raw line is kept so the user can see what the
// engine actually wrote.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string message, std::string rawLine = {});
  const std::string& rawLine() const noexcept { return rawLine_; }

 private:
  std::string rawLine_;
};

class SpawnFailure : public Error {
 public:
  using Error::Error;
};

class HandshakeTimeout : public Error {
 public:
  using Error::Error;
};

class EngineCrashed : public Error {
 public:
  using Error::Error;
};

class ResponseTimeout : public Error {
 public:
  using Error::Error;
};

class MissingAnalysis : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Metric kernel preconditions.
class MetricsError : public Error {
 public:
  using Error::Error;
};
class MissingPolicy : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class EmptySupport : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class MisalignedTurns : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class NoMovesForColor : public MetricsError {
 public:
  using MetricsError::MetricsError;
};

}  // namespace kibitz
