#pragma once

#include <stdexcept>
#include <string>

namespace shipland {

// Every failure raised by the library derives from Error and carries a stable
// machine-readable code (used by the CLI's JSON error output).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SHIPLAND_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

// pose estimation
SHIPLAND_DEFINE_ERROR(PointBehindCamera);
SHIPLAND_DEFINE_ERROR(DegenerateConfiguration);
SHIPLAND_DEFINE_ERROR(NoConvergence);

// vision
SHIPLAND_DEFINE_ERROR(NoForeground);
SHIPLAND_DEFINE_ERROR(IllConditioned);
SHIPLAND_DEFINE_ERROR(ImageFormatError);

// simulation
SHIPLAND_DEFINE_ERROR(NonFinite);
SHIPLAND_DEFINE_ERROR(BarNotVisible);
SHIPLAND_DEFINE_ERROR(EstimateUnavailable);

// learning
SHIPLAND_DEFINE_ERROR(ShapeMismatch);
SHIPLAND_DEFINE_ERROR(NonFiniteGradient);
SHIPLAND_DEFINE_ERROR(BufferTooSmall);

// harness
SHIPLAND_DEFINE_ERROR(ConfigError);
SHIPLAND_DEFINE_ERROR(ControllerDiverged);

#undef SHIPLAND_DEFINE_ERROR

// Carries the violated screening predicate ("width", "height", "slope",
// "separation").
class ScreeningFailed : public Error {
public:
    explicit ScreeningFailed(std::string predicate, const std::string& detail = {})
        : Error("ScreeningFailed",
                "screening failed: " + predicate + (detail.empty() ? "" : " (" + detail + ")")),
          predicate_(std::move(predicate)) {}

    const std::string& predicate() const noexcept { return predicate_; }

private:
    std::string predicate_;
};

// Raised by the detection pipeline; `stage` names the step that gave up.
class NoBarDetected : public Error {
public:
    NoBarDetected(std::string stage, const std::string& reason)
        : Error("NoBarDetected", "no bar detected at stage '" + stage + "': " + reason),
          stage_(std::move(stage)), reason_(reason) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string stage_;
    std::string reason_;
};

}  // namespace shipland
