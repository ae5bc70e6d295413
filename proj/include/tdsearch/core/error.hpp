#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tds {

/// Base of every domain error. `code()` is the stable name used on the wire.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct SourcePosition {
    int line = 1;
    int column = 1;
};

class UnparsableSource : public Error {
public:
    UnparsableSource(const std::string& message, SourcePosition pos)
        : Error("UnparsableSource", message + " at " + std::to_string(pos.line) + ":" +
                                        std::to_string(pos.column)),
          pos_(pos) {}

    SourcePosition position() const noexcept { return pos_; }

private:
    SourcePosition pos_;
};

class MqlSyntaxError : public Error {
public:
    MqlSyntaxError(const std::string& message, std::size_t position, std::vector<std::string> expected)
        : Error("SyntaxError", message), position_(position), expected_(std::move(expected)) {}

    /// 0-based character offset into the query text.
    std::size_t position() const noexcept { return position_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

class NoClassUnderTest : public Error {
public:
    explicit NoClassUnderTest(const std::string& m) : Error("NoClassUnderTest", m) {}
};

class AmbiguousCut : public Error {
public:
    explicit AmbiguousCut(const std::string& m) : Error("AmbiguousCut", m) {}
};

class NoAssertions : public Error {
public:
    explicit NoAssertions(const std::string& m) : Error("NoAssertions", m) {}
};

class AdaptError : public Error {
public:
    explicit AdaptError(const std::string& m) : Error("AdaptError", m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error("IoError", m) {}
};

class EmptyCorpus : public Error {
public:
    explicit EmptyCorpus(const std::string& m) : Error("EmptyCorpus", m) {}
};

class FormatVersionMismatch : public Error {
public:
    explicit FormatVersionMismatch(const std::string& m) : Error("FormatVersionMismatch", m) {}
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& m) : Error("BackendUnavailable", m) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& m) : Error("InvalidArgument", m) {}
};

}  // namespace tds
