#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tarbm {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Exhaustive enumeration was requested on a model that is too large.
struct CapacityError : std::length_error {
    using std::length_error::length_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

using WarningSink = std::function<void(std::string_view)>;

// Non-fatal diagnostics go through a process-wide sink (stderr by default).
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace tarbm
