#include "halfkfn/error.hpp"

#include <iostream>
#include <mutex>

namespace halfkfn {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid input";
        case ErrorCode::DegenerateLabels: return "degenerate labels";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::DegenerateClass: return "degenerate class";
        case ErrorCode::DegenerateVariance: return "degenerate variance";
        case ErrorCode::DegenerateBandwidth: return "degenerate bandwidth";
        case ErrorCode::UnsupportedSize: return "unsupported size";
        case ErrorCode::Config: return "configuration error";
    }
    return "unknown error";
}

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler_slot() {
    static WarningHandler h = [](const std::string& msg) {
        std::cerr << "halfkfn: warning: " << msg << '\n';
    };
    return h;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    handler_slot() = std::move(handler);
}

void warn(const std::string& message) {
    std::lock_guard lock(handler_mutex());
    if (handler_slot()) handler_slot()(message);
}

}  // namespace halfkfn
