#pragma once

#include <stdexcept>
#include <string>

namespace planid {

enum class Errc {
    SelfLoop,
    CycleDetected,
    UnknownNode,
    DuplicateNode,
    UnknownAction,
    LatentConditioning,
    CyclicStrategy,
    IdleHasNoFactor,
    MissingConditioningValue,
    MissingAssignment,
    UnknownVariable,
    NotACComponent,
    LatentsPresent,
    ParseError,
    ModelTooLarge,
    InvalidModel,
};

const char* errc_name(Errc c);

struct Error : std::runtime_error {
    Errc code;
    Error(Errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code(c) {}
};

}  // namespace planid
