#pragma once

#include <stdexcept>
#include <string>

namespace manicore {

enum class ErrorKind {
  ConfigError,
  NonCleanSpectrum,
  SingularBlock,
  InvalidNonlinearity,
  InsufficientSmoothness,
  DomainEscape,
  InfeasibleConstants,
  GapNotClosable,
  NoThreshold,
  EpsilonTooLarge,
  NotAContraction,
  OutsideGamma0,
  ResonantOrder,
  SingularPRho,
  NoConvergence,
  InversionFailure,
  ProjectionFailure,
  PreconditionFailed,
  VerificationFailure,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NonCleanSpectrum: return "NonCleanSpectrum";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::InvalidNonlinearity: return "InvalidNonlinearity";
    case ErrorKind::InsufficientSmoothness: return "InsufficientSmoothness";
    case ErrorKind::DomainEscape: return "DomainEscape";
    case ErrorKind::InfeasibleConstants: return "InfeasibleConstants";
    case ErrorKind::GapNotClosable: return "GapNotClosable";
    case ErrorKind::NoThreshold: return "NoThreshold";
    case ErrorKind::EpsilonTooLarge: return "EpsilonTooLarge";
    case ErrorKind::NotAContraction: return "NotAContraction";
    case ErrorKind::OutsideGamma0: return "OutsideGamma0";
    case ErrorKind::ResonantOrder: return "ResonantOrder";
    case ErrorKind::SingularPRho: return "SingularPRho";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InversionFailure: return "InversionFailure";
    case ErrorKind::ProjectionFailure: return "ProjectionFailure";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::VerificationFailure: return "VerificationFailure";
  }
  return "Unknown";
}

// CLI exit status per error family: 2 config, 3 infeasible, 4 no convergence, 5 verification.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::NonCleanSpectrum:
    case ErrorKind::SingularBlock:
    case ErrorKind::InvalidNonlinearity:
    case ErrorKind::InsufficientSmoothness:
    case ErrorKind::DomainEscape:
      return 2;
    case ErrorKind::InfeasibleConstants:
    case ErrorKind::GapNotClosable:
    case ErrorKind::NoThreshold:
    case ErrorKind::EpsilonTooLarge:
    case ErrorKind::NotAContraction:
    case ErrorKind::OutsideGamma0:
    case ErrorKind::ResonantOrder:
    case ErrorKind::SingularPRho:
      return 3;
    case ErrorKind::NoConvergence:
    case ErrorKind::InversionFailure:
    case ErrorKind::ProjectionFailure:
      return 4;
    case ErrorKind::PreconditionFailed:
    case ErrorKind::VerificationFailure:
      return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return manicore::exit_code(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace manicore
