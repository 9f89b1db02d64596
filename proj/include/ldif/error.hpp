#pragma once

#include <stdexcept>
#include <string>

namespace ldif {

enum class ErrorKind {
    config,     // invalid configuration or dimensions
    data,       // malformed or insufficient data
    numerical,  // NaN loss, failed gradient check
    index,      // step or frame index out of range
    io,         // filesystem failures
};

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

class ConfigError : public Error {
   public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
   public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericalError : public Error {
   public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class IndexError : public Error {
   public:
    explicit IndexError(const std::string& what) : Error(ErrorKind::index, what) {}
};

class IoError : public Error {
   public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Shape mismatches are configuration problems from the caller's point of view.
class ShapeError : public ConfigError {
   public:
    using ConfigError::ConfigError;
};

// Parse failures carry the byte offset where decoding stopped.
class ParseError : public DataError {
   public:
    ParseError(const std::string& what, std::size_t offset)
        : DataError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

   private:
    std::size_t offset_;
};

}  // namespace ldif
