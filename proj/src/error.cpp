#include "ocgs/error.hpp"

namespace ocgs {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter_corruption: return "parameter_corruption";
    case ErrorKind::ingest: return "ingest";
    case ErrorKind::unsupported_model: return "unsupported_model";
    case ErrorKind::format: return "format";
    case ErrorKind::contract: return "contract";
    case ErrorKind::render: return "render";
    case ErrorKind::initialization: return "initialization";
    case ErrorKind::config: return "config";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::resource: return "resource";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

}  // namespace ocgs
