#pragma once

#include <stdexcept>
#include <string>

namespace qflow {

// Invalid physical input: bad element values, violated preconditions,
// netlist problems. Maps to CLI exit code 2.
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to reach its stated tolerance. Maps to CLI
// exit code 3.
struct convergence_error : std::runtime_error {
    explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qflow
