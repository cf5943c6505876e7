#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psimc {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad formula or knowledge base text. Carries the byte offset within the
// offending line and, when parsing a whole file, the 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t offset, std::size_t line = 0)
        : Error(what), offset(offset), line(line) {}
    std::size_t offset;
    std::size_t line;
};

// Atom outside the agreed signature, width mismatch, or unassigned atom.
struct SignatureError : Error {
    using Error::Error;
};

// An enumeration would exceed the configured atom cap.
struct CapError : Error {
    using Error::Error;
};

// Key mismatch, malformed ciphertext bytes, out-of-range plaintext.
struct CryptoError : Error {
    using Error::Error;
};

// Transport failure: timeout, peer closed, socket error, oversize frame.
struct ChannelError : Error {
    using Error::Error;
};

// Peer sent an abort frame or violated the expected frame sequence.
struct ProtocolError : Error {
    using Error::Error;
};

// The two parties disagree on session configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Locally rejected input (empty model set, inconsistent KB where one is
// required to be consistent, bad CLI value).
struct InputError : Error {
    using Error::Error;
};

}  // namespace psimc
