#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfdqn {

// Error taxonomy shared by the CLI exit codes: config = 2, format = 3,
// numeric = 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::uint64_t offset)
        : std::runtime_error(msg + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// The sensor touched the surface while the no-contact reference frame was
// being captured.
class BackgroundCaptureError : public std::runtime_error {
public:
    explicit BackgroundCaptureError(const std::string& msg) : std::runtime_error(msg) {}
};

// Action classification was attempted from a pose without band contact.
class ClassificationError : public std::runtime_error {
public:
    explicit ClassificationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sfdqn
