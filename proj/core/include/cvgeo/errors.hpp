#ifndef CVGEO_ERRORS_HPP
#define CVGEO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvgeo {

// Base for every error thrown by the library. The CLI maps subclasses to
// exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class EmbeddingDegenerateError : public NormalizationError {
public:
    using NormalizationError::NormalizationError;
};

class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

class EmptyBatchError : public Error {
public:
    using Error::Error;
};

class PoolEmptyError : public Error {
public:
    using Error::Error;
};

class BatchTooSmallError : public Error {
public:
    using Error::Error;
};

class TraceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, long at_step)
        : Error(msg + " (step " + std::to_string(at_step) + ")"), step(at_step) {}
    long step;
};

class DegenerateMapError : public Error {
public:
    using Error::Error;
};

class SupervisionError : public Error {
public:
    using Error::Error;
};

}  // namespace cvgeo

#endif
