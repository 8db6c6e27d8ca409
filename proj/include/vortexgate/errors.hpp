#pragma once

#include <stdexcept>
#include <string>

namespace vortexgate {

// Broken precondition of a public operation (non-normalized amplitudes,
// non-unit axis, non-orthonormal basis, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Only the m = +1 / m = -1 subspace is synthesized.
class UnsupportedMode : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The grid cannot represent the requested operation faithfully.
// `minimal_n` is the smallest grid (same pitch) predicted to be adequate,
// or 0 when no such estimate applies.
class SamplingError : public std::runtime_error {
public:
    explicit SamplingError(const std::string& what, int minimal_n = 0)
        : std::runtime_error(what), minimal_n_(minimal_n) {}
    [[nodiscard]] int minimal_n() const { return minimal_n_; }

private:
    int minimal_n_;
};

// The mode-converter tuner found no sign-consistent solution.
class InfeasibleGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent scenario document.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vortexgate
