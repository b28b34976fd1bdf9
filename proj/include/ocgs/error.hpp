#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ocgs {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  parameter_corruption,
  ingest,
  unsupported_model,
  format,
  contract,
  render,
  initialization,
  config,
  numerical,
  checkpoint,
  resource,
  undefined_metric,
  usage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed or truncated file; `offset` is the byte position where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(ErrorKind::format, message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Raised by the rasterizer when a splat carries non-finite parameters.
class RenderError : public Error {
 public:
  RenderError(const std::string& message, std::size_t splat)
      : Error(ErrorKind::render, message + " (splat " + std::to_string(splat) + ")"), splat_(splat) {}

  std::size_t splat_index() const noexcept { return splat_; }

 private:
  std::size_t splat_;
};

}  // namespace ocgs
