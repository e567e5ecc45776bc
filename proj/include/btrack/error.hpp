#pragma once

#include <stdexcept>
#include <string>

namespace btrack {

enum class Errc {
    invalid_scope,
    incomplete_valuation,
    inconsistent_effect,
    impossible_execution,
    inapplicable_action,
    inconsistent_initial_state,
    unqueryable,
    generation_failed,
    sensor_model_bug,
    capacity_exceeded,
    parse_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_scope: return "invalid-scope";
        case Errc::incomplete_valuation: return "incomplete-valuation";
        case Errc::inconsistent_effect: return "inconsistent-effect";
        case Errc::impossible_execution: return "impossible-execution";
        case Errc::inapplicable_action: return "inapplicable-action";
        case Errc::inconsistent_initial_state: return "inconsistent-initial-state";
        case Errc::unqueryable: return "unqueryable";
        case Errc::generation_failed: return "generation-failed";
        case Errc::sensor_model_bug: return "sensor-model-bug";
        case Errc::capacity_exceeded: return "capacity-exceeded";
        case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

} // namespace btrack
