#ifndef MEMQ_ERRORS_HPP
#define MEMQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace memq {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Ingestion / data model ----------------------------------------------------

class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& reason)
        : Error("schema error at " + path + ": " + reason), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class DuplicateCharacter : public Error {
public:
    explicit DuplicateCharacter(const std::string& id)
        : Error("duplicate character_id: " + id) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Classifier ----------------------------------------------------------------

class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

// Retrieval / reranking -----------------------------------------------------

class EmptyCorpus : public Error {
public:
    explicit EmptyCorpus(const std::string& msg = "empty corpus") : Error(msg) {}
};

class EmptyPool : public Error {
public:
    explicit EmptyPool(const std::string& msg = "empty candidate pool") : Error(msg) {}
};

// Synthesis backends ---------------------------------------------------------

class BackendError : public Error {
public:
    explicit BackendError(const std::string& msg) : Error(msg) {}
};

class TemplateError : public BackendError {
public:
    explicit TemplateError(const std::string& msg) : BackendError(msg) {}
};

class TimeoutError : public BackendError {
public:
    explicit TimeoutError(const std::string& msg) : BackendError(msg) {}
};

class RateLimited : public BackendError {
public:
    RateLimited(const std::string& msg, int retry_after_s)
        : BackendError(msg), retry_after_s_(retry_after_s) {}
    int retry_after_s() const { return retry_after_s_; }

private:
    int retry_after_s_;
};

class EndpointError : public BackendError {
public:
    EndpointError(int status, const std::string& body)
        : BackendError("endpoint returned status " + std::to_string(status) + ": " + body),
          status_(status) {}
    int status() const { return status_; }

private:
    int status_ = 0;
};

class BudgetExceeded : public BackendError {
public:
    explicit BudgetExceeded(const std::string& msg) : BackendError(msg) {}
};

// Evaluation ------------------------------------------------------------------

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

class NoScorableQuestions : public Error {
public:
    explicit NoScorableQuestions(const std::string& msg = "no questions with anchors to score")
        : Error(msg) {}
};

} // namespace memq

#endif
