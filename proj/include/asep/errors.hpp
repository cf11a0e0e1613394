#pragma once

#include <stdexcept>
#include <string>

namespace asep {

enum class ErrorKind {
  domain,
  capacity,
  pole,
  accuracy,
  truncation,
  conditioning,
  inversion,
  regime,
  unsupported,
  censoring,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct CapacityError : Error {
  explicit CapacityError(const std::string& w) : Error(ErrorKind::capacity, w) {}
};
struct PoleError : Error {
  explicit PoleError(const std::string& w) : Error(ErrorKind::pole, w) {}
};
struct AccuracyError : Error {
  AccuracyError(const std::string& w, double achieved)
      : Error(ErrorKind::accuracy, w), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};
struct TruncationError : Error {
  TruncationError(const std::string& w, double tail)
      : Error(ErrorKind::truncation, w), tail_(tail) {}
  double tail() const noexcept { return tail_; }

 private:
  double tail_;
};
struct ConditioningError : Error {
  ConditioningError(const std::string& w, double smallest_singular_value)
      : Error(ErrorKind::conditioning, w), sigma_min_(smallest_singular_value) {}
  double smallest_singular_value() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};
struct InversionError : Error {
  explicit InversionError(const std::string& w) : Error(ErrorKind::inversion, w) {}
};
struct RegimeError : Error {
  explicit RegimeError(const std::string& w) : Error(ErrorKind::regime, w) {}
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error(ErrorKind::unsupported, w) {}
};
struct CensoringError : Error {
  CensoringError(const std::string& w, double fraction)
      : Error(ErrorKind::censoring, w), fraction_(fraction) {}
  double censored_fraction() const noexcept { return fraction_; }

 private:
  double fraction_;
};

}  // namespace asep
