#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtrack {

enum class ErrorCode {
  InvalidCost,
  DegenerateBox,
  DegenerateState,
  FrameOrder,
  SequenceLoad,
  AlignmentViolation,
  ParseError,
  IoError,
  MalformedSample,
  GroupTooSmall,
  InvalidDistribution,
  SequenceMismatch,
  NoData,
  BackendFailure,
  RemoteError,
  ProtocolError,
  EmptyQuery,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidCost: return "InvalidCost";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::DegenerateState: return "DegenerateState";
    case ErrorCode::FrameOrder: return "FrameOrder";
    case ErrorCode::SequenceLoad: return "SequenceLoad";
    case ErrorCode::AlignmentViolation: return "AlignmentViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedSample: return "MalformedSample";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::SequenceMismatch: return "SequenceMismatch";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::RemoteError: return "RemoteError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rtrack
