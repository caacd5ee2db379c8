#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace halfkfn {

enum class ErrorCode {
    InvalidInput,
    DegenerateLabels,
    Parse,
    Io,
    DegenerateClass,
    DegenerateVariance,
    DegenerateBandwidth,
    UnsupportedSize,
    Config,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code is stable and is what the
/// C API maps onto its status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Warnings (dropped classes, oversized pools) go through a replaceable sink.
/// The default writes one line to stderr.
using WarningHandler = std::function<void(const std::string&)>;

void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace halfkfn
