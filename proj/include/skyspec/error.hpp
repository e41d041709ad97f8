#pragma once

#include <stdexcept>
#include <string>

namespace skyspec {

/// Shapes or sizes that do not agree (vector lengths, layer widths, table dims).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Energy efficiency with a zero denominator.
class UndefinedEnergyEfficiency : public std::domain_error {
public:
    UndefinedEnergyEfficiency() : std::domain_error("energy efficiency undefined: zero energy denominator") {}
};

/// Two-state chain with p01 = p10 = 0 has no unique stationary distribution.
class NonUniqueStationary : public std::domain_error {
public:
    NonUniqueStationary() : std::domain_error("stationary distribution not unique: p01 = p10 = 0") {}
};

/// Refusal to enumerate a state space that is too large.
class ComplexityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// NaN or infinity encountered during training or backpropagation.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Q-value magnitude exceeded the divergence guard.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary file (bad magic, version, truncated payload).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace skyspec
