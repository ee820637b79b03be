#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sentcast {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot be used (too short, non-finite, malformed).
class DataError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's documented precondition.
class PreconditionError : public DataError {
public:
    using DataError::DataError;
};

/// Storage failure: unreadable file, short write, failed fsync.
class IoError : public Error {
public:
    using Error::Error;
};

/// Durable state that fails validation somewhere other than a torn tail.
class CorruptionError : public Error {
public:
    explicit CorruptionError(const std::string& what,
                             std::optional<std::uint64_t> sequence_no = std::nullopt)
        : Error(what), sequence_no_(sequence_no) {}

    [[nodiscard]] std::optional<std::uint64_t> sequence_no() const noexcept { return sequence_no_; }

private:
    std::optional<std::uint64_t> sequence_no_;
};

} // namespace sentcast
