#pragma once

#include <stdexcept>
#include <string>

namespace roq {

/// Error codes surfaced by API misuse and environment failures.
/// Protocol-level outcomes (refused connections, handshake failures)
/// are delivered as events, not exceptions.
enum class Errc {
  AddressInUse,
  MissingSecurityConfig,
  NotEstablished,
  StreamLimitExceeded,
  StreamClosed,
  ConnectionClosed,
  DuplicateNode,
  DuplicateLink,
  UnknownEndpoint,
  MtuExceeded,
  PastDeadline,
  MessageTooLarge,
  KeyMismatch,
  InvalidValue,
  IoError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::AddressInUse: return "AddressInUse";
    case Errc::MissingSecurityConfig: return "MissingSecurityConfig";
    case Errc::NotEstablished: return "NotEstablished";
    case Errc::StreamLimitExceeded: return "StreamLimitExceeded";
    case Errc::StreamClosed: return "StreamClosed";
    case Errc::ConnectionClosed: return "ConnectionClosed";
    case Errc::DuplicateNode: return "DuplicateNode";
    case Errc::DuplicateLink: return "DuplicateLink";
    case Errc::UnknownEndpoint: return "UnknownEndpoint";
    case Errc::MtuExceeded: return "MtuExceeded";
    case Errc::PastDeadline: return "PastDeadline";
    case Errc::MessageTooLarge: return "MessageTooLarge";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace roq
