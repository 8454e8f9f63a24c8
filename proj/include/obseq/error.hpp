#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obseq {

// Every failure the library reports carries one of these codes. The CLI maps
// codes onto its documented exit statuses (see exit_status()).
enum class ErrorCode {
  // algebra
  NonSquare,
  DimensionTooLarge,
  ConvergenceFailure,
  UnstableTransition,
  NonSymmetricQ,
  NoStableSolvent,
  SingularA0,
  // remodel
  InvalidModel,
  NotDeterminate,
  NotAllUnstable,
  SingularN,
  MissingSunspotVariance,
  // catalog
  ParamOutOfRange,
  UnknownModel,
  ComplexRoots,
  // equivalence
  UnstableInput,
  ComplexFactorization,
  // identification
  MapUndefinedAtPerturbation,
  EmptyAdmissibleGrid,
  InvalidGrid,
  // growth
  ZetaNonPositive,
  NegativeDiscriminant,
  NoRootInBracket,
  // montecarlo
  InvalidSimSpec,
  UnstableGenerator,
  SingularRegressor,
  UnstableProcess,
  InsufficientData,
  // io / docsmap
  ParseError,
  ManifestIncomplete,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::UnstableTransition: return "UnstableTransition";
    case ErrorCode::NonSymmetricQ: return "NonSymmetricQ";
    case ErrorCode::NoStableSolvent: return "NoStableSolvent";
    case ErrorCode::SingularA0: return "SingularA0";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::NotDeterminate: return "NotDeterminate";
    case ErrorCode::NotAllUnstable: return "NotAllUnstable";
    case ErrorCode::SingularN: return "SingularN";
    case ErrorCode::MissingSunspotVariance: return "MissingSunspotVariance";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::ComplexRoots: return "ComplexRoots";
    case ErrorCode::UnstableInput: return "UnstableInput";
    case ErrorCode::ComplexFactorization: return "ComplexFactorization";
    case ErrorCode::MapUndefinedAtPerturbation: return "MapUndefinedAtPerturbation";
    case ErrorCode::EmptyAdmissibleGrid: return "EmptyAdmissibleGrid";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::ZetaNonPositive: return "ZetaNonPositive";
    case ErrorCode::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorCode::NoRootInBracket: return "NoRootInBracket";
    case ErrorCode::InvalidSimSpec: return "InvalidSimSpec";
    case ErrorCode::UnstableGenerator: return "UnstableGenerator";
    case ErrorCode::SingularRegressor: return "SingularRegressor";
    case ErrorCode::UnstableProcess: return "UnstableProcess";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ManifestIncomplete: return "ManifestIncomplete";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Carries the root modulus sqrt(b/beta) when the hybrid characteristic
// polynomial has a complex pair.
class ComplexRootsError : public Error {
 public:
  ComplexRootsError(double modulus, const std::string& what)
      : Error(ErrorCode::ComplexRoots, what), modulus_(modulus) {}

  double modulus() const noexcept { return modulus_; }

 private:
  double modulus_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// CLI exit statuses: 0 success/equivalent, 1 not equivalent, 2 input error,
// 3 determinacy failure, 4 numerical failure, 5 domain violation.
inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidModel:
    case ErrorCode::UnknownModel:
    case ErrorCode::ParamOutOfRange:
    case ErrorCode::NonSquare:
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::NonSymmetricQ:
    case ErrorCode::InvalidGrid:
    case ErrorCode::InvalidSimSpec:
    case ErrorCode::InsufficientData:
    case ErrorCode::ManifestIncomplete:
      return 2;
    case ErrorCode::NotDeterminate:
    case ErrorCode::NoStableSolvent:
    case ErrorCode::NotAllUnstable:
    case ErrorCode::MissingSunspotVariance:
      return 3;
    case ErrorCode::ZetaNonPositive:
    case ErrorCode::NegativeDiscriminant:
    case ErrorCode::ComplexRoots:
    case ErrorCode::ComplexFactorization:
      return 5;
    default:
      return 4;
  }
}

}  // namespace obseq
