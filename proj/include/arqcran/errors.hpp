#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arqcran {

/// Bad argument to a model constructor or operation.
class invalid_parameter_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parameter combination that has no valid model (e.g. rate/burstiness
/// pairs that would require a transition probability above one).
class infeasible_parameter_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Chain would be absorbing or otherwise non-ergodic by construction.
class degenerate_chain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration document problems (unknown keys, bad values).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical routine failed to reach its accuracy target.
class numeric_failure_error : public std::runtime_error {
public:
    numeric_failure_error(const std::string& msg, int bin_from, int bin_to)
        : std::runtime_error(msg), bin_from(bin_from), bin_to(bin_to) {}
    explicit numeric_failure_error(const std::string& msg)
        : std::runtime_error(msg), bin_from(-1), bin_to(-1) {}

    int bin_from;
    int bin_to;
};

/// Iterative solver did not converge within the iteration budget.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& msg, double residual, std::size_t iterations)
        : std::runtime_error(msg), residual(residual), iterations(iterations) {}

    double residual;
    std::size_t iterations;
};

/// State enumeration exceeded the configured cap.
class capacity_error : public std::runtime_error {
public:
    capacity_error(const std::string& msg, std::size_t cap, std::size_t reached)
        : std::runtime_error(msg), cap(cap), reached(reached) {}

    std::size_t cap;
    std::size_t reached;
};

/// Structural model problem discovered during analysis (e.g. more than
/// one closed communicating class).
class model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state violated an invariant that the transition function maintains;
/// indicates a caller handing in a hand-built malformed state or a bug.
class internal_invariant_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace arqcran
