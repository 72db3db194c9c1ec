#pragma once
#include <stdexcept>
#include <string>

namespace bip {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: invalid rates, malformed options, out-of-range parameters.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Bad input data: malformed files, layout mismatches, insufficient demonstrations.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Parse failure with file/line context.
class ParseError : public DataError {
public:
    ParseError(const std::string& path, long line, const std::string& msg)
        : DataError(path + ":" + std::to_string(line) + ": " + msg),
          path_(path), line_(line) {}
    const std::string& path() const { return path_; }
    long line() const { return line_; }

private:
    std::string path_;
    long line_;
};

// Numerical breakdown: non-finite state, singular systems that jitter could not fix.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace bip
