#pragma once

#include <stdexcept>
#include <string>

namespace cropt {

// Invalid argument values, violated preconditions, malformed specs.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Linear-algebra breakdown (e.g. kernel matrix not factorizable).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or incomplete input data files.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

// A simulator call that could not produce a yield value.
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment/CLI configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing weather archives or other environment problems.
class ArchiveError : public std::runtime_error {
public:
    explicit ArchiveError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

template <class E = DomainError>
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw E(msg);
}

} // namespace detail
} // namespace cropt
