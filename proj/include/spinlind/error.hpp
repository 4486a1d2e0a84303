#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace spinlind {

// Bad input: malformed files, failed schema or invariant checks. CLI exit 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// The model cannot produce a number for valid input. CLI exit 3.
class PhysicsError : public std::runtime_error {
public:
    explicit PhysicsError(const std::string& what,
                          std::optional<std::pair<int, int>> pair = std::nullopt)
        : std::runtime_error(pair ? annotate(what, *pair) : what), pair_(pair) {}

    const std::optional<std::pair<int, int>>& pair() const noexcept { return pair_; }

private:
    static std::string annotate(const std::string& what, std::pair<int, int> p) {
        return "pair (" + std::to_string(p.first) + "," + std::to_string(p.second) + "): " + what;
    }

    std::optional<std::pair<int, int>> pair_;
};

// Two nuclei (or a nucleus and the electron) closer than the coincidence threshold.
class DegenerateGeometryError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

// Resonant pair with no broadening: the flip-flop rate diverges.
class DivergentRateError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

// Density matrix left the physical set during propagation.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spinlind
