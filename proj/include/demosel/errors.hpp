#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace demosel {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntaxError : Error {
    SyntaxError(const std::string& what, std::size_t pos)
        : Error(what + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct InvalidK : Error {
    using Error::Error;
};

struct BudgetTooSmall : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct CorpusError : Error {
    CorpusError(const std::string& what, std::vector<std::string> fails)
        : Error(what), failures(std::move(fails)) {}
    std::vector<std::string> failures;
};

struct IndexVersionError : Error {
    using Error::Error;
};

struct GenerationError : Error {
    using Error::Error;
};

struct TransportError : Error {
    using Error::Error;
};

struct ApiError : Error {
    ApiError(int status_code, std::string body_excerpt)
        : Error("completion endpoint returned HTTP " + std::to_string(status_code) + ": " + body_excerpt),
          status(status_code),
          body(std::move(body_excerpt)) {}
    int status;
    std::string body;
};

}  // namespace demosel
