#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conet {

enum class Errc {
  // naming
  EmptyComponent,
  InvalidUtf8,
  NameTooLong,
  // wire
  Truncated,
  BadVersion,
  BadType,
  VarintOverflow,
  TrailingGarbage,
  OptionOverflow,
  ChecksumMismatch,
  UnknownProtocol,
  AlreadyTagged,
  NotTagged,
  InvalidTag,
  InvalidHeader,
  WrongFormat,
  // ictp
  EmptyContent,
  InvalidSegmentation,
  InconsistentTotals,
  MixedIdentity,
  // node
  TableFull,
  // nrs
  NoRoute,
  TagSpaceExhausted,
  UnknownCache,
  BadEnvelope,
  BadJson,
  UnknownOp,
  // cache
  SegmentOutOfRange,
  // sim
  ConfigError,
};

constexpr std::string_view
to_string(Errc code) noexcept
{
  switch (code) {
    case Errc::EmptyComponent: return "EmptyComponent";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::NameTooLong: return "NameTooLong";
    case Errc::Truncated: return "Truncated";
    case Errc::BadVersion: return "BadVersion";
    case Errc::BadType: return "BadType";
    case Errc::VarintOverflow: return "VarintOverflow";
    case Errc::TrailingGarbage: return "TrailingGarbage";
    case Errc::OptionOverflow: return "OptionOverflow";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::UnknownProtocol: return "UnknownProtocol";
    case Errc::AlreadyTagged: return "AlreadyTagged";
    case Errc::NotTagged: return "NotTagged";
    case Errc::InvalidTag: return "InvalidTag";
    case Errc::InvalidHeader: return "InvalidHeader";
    case Errc::WrongFormat: return "WrongFormat";
    case Errc::EmptyContent: return "EmptyContent";
    case Errc::InvalidSegmentation: return "InvalidSegmentation";
    case Errc::InconsistentTotals: return "InconsistentTotals";
    case Errc::MixedIdentity: return "MixedIdentity";
    case Errc::TableFull: return "TableFull";
    case Errc::NoRoute: return "NoRoute";
    case Errc::TagSpaceExhausted: return "TagSpaceExhausted";
    case Errc::UnknownCache: return "UnknownCache";
    case Errc::BadEnvelope: return "BadEnvelope";
    case Errc::BadJson: return "BadJson";
    case Errc::UnknownOp: return "UnknownOp";
    case Errc::SegmentOutOfRange: return "SegmentOutOfRange";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the Errc codes so
/// callers and tests can branch on the kind rather than on message text.
class Error : public std::runtime_error
{
public:
  Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what)
    , m_code(code)
  {
  }

  Errc
  code() const noexcept
  {
    return m_code;
  }

private:
  Errc m_code;
};

} // namespace conet
