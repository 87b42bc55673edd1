#pragma once

#include <stdexcept>
#include <string>

namespace cardaudit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, decimals, framework documents).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A well-formed document that breaks a framework invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition (missing subsection, mixed versions, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Bad run configuration: agent panel, backend spec, model list.
class ConfigError : public Error {
public:
    using Error::Error;
};

class RetrievalError : public Error {
public:
    enum class Kind { Authentication, Transport, Timeout, Backend };

    RetrievalError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const { return kind_; }
    bool retryable() const { return kind_ == Kind::Transport || kind_ == Kind::Timeout; }

private:
    Kind kind_;
};

/// Too few usable verdicts, or an agent transport failure.
class JudgingError : public Error {
public:
    JudgingError(const std::string& what, bool retryable = false) : Error(what), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

class StorageError : public Error {
public:
    using Error::Error;
};

}  // namespace cardaudit
