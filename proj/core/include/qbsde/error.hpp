/** @file error.hpp
 *  @brief Typed error hierarchy used across the library.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qbsde {

enum class ErrorKind {
    input,
    coefficient,
    divergence,
    certificate,
    singular,
    lyapunov_domain,
    overflow,
    no_convergence,
    basis,
    resolution,
    domain,
    precondition,
    weight_degeneracy,
    config,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace qbsde
