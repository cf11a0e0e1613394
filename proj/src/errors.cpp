#include "asep/errors.hpp"

namespace asep {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::pole: return "pole";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::inversion: return "inversion";
    case ErrorKind::regime: return "regime";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::censoring: return "censoring";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

}  // namespace asep
