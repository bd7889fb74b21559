#include "qbsde/error.hpp"

namespace qbsde {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::input: return "input";
        case ErrorKind::coefficient: return "coefficient-evaluation";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::certificate: return "certificate-invalid";
        case ErrorKind::singular: return "singular-transform";
        case ErrorKind::lyapunov_domain: return "lyapunov-domain";
        case ErrorKind::overflow: return "numeric-overflow";
        case ErrorKind::no_convergence: return "no-convergence";
        case ErrorKind::basis: return "ill-conditioned-basis";
        case ErrorKind::resolution: return "resolution";
        case ErrorKind::domain: return "domain";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::weight_degeneracy: return "weight-degeneracy";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace qbsde
