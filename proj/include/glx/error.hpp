#pragma once

#include <stdexcept>
#include <string>

namespace glx {

enum class Errc {
  NotSelfAdjoint,
  DomainError,
  DegenerateNorm,
  InvalidGraph,
  IsolatedVertex,
  InvalidAbvp,
  DirichletSpectrumHit,
  NotSplit,
  SpectrumHit,
  SingularDtN,
  BlueprintInvalid,
  FibreMismatch,
  NotRegular,
  DirichletPole,
  MuOutOfRange,
  MeshTooCoarse,
  ZeroNotSimple,
  BdMapEstimateFails,
  HypothesisFails,
  SmallnessFails,
  InputError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotSelfAdjoint: return "NotSelfAdjoint";
    case Errc::DomainError: return "DomainError";
    case Errc::DegenerateNorm: return "DegenerateNorm";
    case Errc::InvalidGraph: return "InvalidGraph";
    case Errc::IsolatedVertex: return "IsolatedVertex";
    case Errc::InvalidAbvp: return "InvalidAbvp";
    case Errc::DirichletSpectrumHit: return "DirichletSpectrumHit";
    case Errc::NotSplit: return "NotSplit";
    case Errc::SpectrumHit: return "SpectrumHit";
    case Errc::SingularDtN: return "SingularDtN";
    case Errc::BlueprintInvalid: return "BlueprintInvalid";
    case Errc::FibreMismatch: return "FibreMismatch";
    case Errc::NotRegular: return "NotRegular";
    case Errc::DirichletPole: return "DirichletPole";
    case Errc::MuOutOfRange: return "MuOutOfRange";
    case Errc::MeshTooCoarse: return "MeshTooCoarse";
    case Errc::ZeroNotSimple: return "ZeroNotSimple";
    case Errc::BdMapEstimateFails: return "BdMapEstimateFails";
    case Errc::HypothesisFails: return "HypothesisFails";
    case Errc::SmallnessFails: return "SmallnessFails";
    case Errc::InputError: return "InputError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace glx
