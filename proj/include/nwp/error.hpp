#pragma once

#include <stdexcept>
#include <string>

namespace nwp {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidChannelError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class InvalidGridError : public Error { using Error::Error; };
class GridMismatchError : public Error { using Error::Error; };
class InvalidStateError : public Error { using Error::Error; };

// Archive / raw ingestion
class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class TruncationError : public Error { using Error::Error; };
class UnsupportedLayoutError : public Error { using Error::Error; };
class LayoutError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };

class TimeMismatchError : public Error { using Error::Error; };
class EmptyMaskError : public Error { using Error::Error; };
class DegenerateAnomalyError : public Error { using Error::Error; };

class ScheduleError : public Error { using Error::Error; };
class RolloutError : public Error { using Error::Error; };

class ConfigError : public Error { using Error::Error; };

/// Malformed metric table; carries the 1-based line number.
class CsvParseError : public Error {
public:
    CsvParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace nwp
