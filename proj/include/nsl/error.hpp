#pragma once
#include <stdexcept>
#include <string>

namespace nsl {

enum class ErrorKind {
    Parse,
    Config,
    Domain,
    SingularMetric,
    DegenerateOmega,
    ZeroWv,
    NonFiniteState,
    AsymmetricGauge,
    RankDeficientTangents,
    NuVanished,
    GridMismatch,
    EmptySampler,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

    // parse/config problems are the user's; everything else is numerics
    bool is_config() const { return kind_ == ErrorKind::Parse || kind_ == ErrorKind::Config; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(ErrorKind::Parse, msg + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace nsl
