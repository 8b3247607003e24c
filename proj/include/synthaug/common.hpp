#ifndef SYNTHAUG_COMMON_HPP
#define SYNTHAUG_COMMON_HPP

#include <stdexcept>
#include <string>

namespace synthaug {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCode : int {
    usage = 2,    // bad config, bad arguments, violated precondition
    data = 3,     // manifest/checkpoint integrity
    numeric = 4,  // non-finite loss, diverged training
    io = 5,       // missing/unwritable files
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }
    int exit_code() const { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(ErrorCode::usage, what) {}
};
struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorCode::data, what) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};
struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace synthaug

#endif
