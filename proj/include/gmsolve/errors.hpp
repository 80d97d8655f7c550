#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmsolve {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: bad grid size, malformed config, unknown kind tag.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string field = {}, int line = 0)
        : Error(format(what, field, line)), detail_(what), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    /// The message without the line and field prefix.
    const std::string& detail() const noexcept { return detail_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& what, const std::string& field, int line) {
        std::string msg;
        if (line > 0) msg += "line " + std::to_string(line) + ": ";
        if (!field.empty()) msg += field + ": ";
        return msg + what;
    }

    std::string detail_;
    std::string field_;
    int line_ = 0;
};

/// A stencil reached a node without data. Indicates a broken grid.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// An iteration hit its budget. Carries the residual (or difference) history.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// NaN, overflow or unbounded growth during an iteration.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::vector<double> history = {})
        : Error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// A numerical diagnostic contradicted a guarantee of the operator family.
class DiagnosticError : public Error {
public:
    using Error::Error;
};

}  // namespace gmsolve
