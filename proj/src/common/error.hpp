#pragma once

#include <stdexcept>
#include <string>

namespace rshallu {

// Error families map 1:1 onto the C status codes and CLI exit codes.
enum class ErrorKind {
    Internal = 1,
    Usage = 2,
    Data = 3,
    Transport = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(ErrorKind::Transport, what) {}
};

// Unreadable line-delimited input. Line numbers are 1-based.
class FormatError : public DataError {
public:
    FormatError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class JoinError : public DataError {
public:
    explicit JoinError(const std::string& what) : DataError("join error: " + what) {}
};

class ConfigError : public UsageError {
public:
    explicit ConfigError(const std::string& what) : UsageError("configuration error: " + what) {}
};

} // namespace rshallu
