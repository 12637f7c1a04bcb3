#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace byol {

// Exit codes used by the CLI. Library code only throws; the mapping lives here
// so every layer agrees on it.
enum class ExitCode : int {
  ok = 0,
  contract_violation = 1,
  io_failure = 2,
  usage = 64,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::contract_violation; }
};

// A precondition of an operation was not met by its caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::io_failure; }
};

// Malformed UTF-8. `offset` is the byte offset of the first bad byte.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& where, std::size_t offset)
      : Error(where + ": invalid UTF-8 at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A structured-record file contained a line that could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t byte_offset,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what +
              " (byte " + std::to_string(byte_offset) + ")"),
        line_(line),
        byte_offset_(byte_offset) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

}  // namespace byol
