#include "nsl/error.hpp"

namespace nsl {

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::SingularMetric: return "SingularMetric";
        case ErrorKind::DegenerateOmega: return "DegenerateOmega";
        case ErrorKind::ZeroWv: return "ZeroWv";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::AsymmetricGauge: return "AsymmetricGauge";
        case ErrorKind::RankDeficientTangents: return "RankDeficientTangents";
        case ErrorKind::NuVanished: return "NuVanished";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::EmptySampler: return "EmptySampler";
    }
    return "Error";
}

}  // namespace nsl
