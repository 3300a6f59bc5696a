#pragma once

#include <stdexcept>
#include <string>

namespace morphwing {

// Process exit codes double as error categories.
enum class ErrorKind : int {
    Validation = 2,
    Generation = 3,
    Solve = 4,
    Io = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& message)
        : std::runtime_error(stage.empty() ? message : stage + ": " + message),
          kind_(kind),
          stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
    std::string stage_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& message, std::string stage = "")
        : Error(ErrorKind::Validation, std::move(stage), message) {}
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    explicit DomainError(const std::string& message, std::string stage = "")
        : Error(ErrorKind::Validation, std::move(stage), message) {}
};

struct GenerationError : Error {
    explicit GenerationError(const std::string& message, std::string stage = "")
        : Error(ErrorKind::Generation, std::move(stage), message) {}
};

struct SolveError : Error {
    explicit SolveError(const std::string& message, std::string stage = "")
        : Error(ErrorKind::Solve, std::move(stage), message) {}
};

struct IoError : Error {
    explicit IoError(const std::string& message, std::string stage = "")
        : Error(ErrorKind::Io, std::move(stage), message) {}
};

}  // namespace morphwing
