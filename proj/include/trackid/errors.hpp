#pragma once
#include <stdexcept>
#include <string>

namespace trackid {

// Error taxonomy mapped to CLI exit codes: config=2, io=3, prereq=4, numeric=5.
// Shape violations are engine failures and exit with the numeric code.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
    int exit_code() const override { return 2; }
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io: " + msg) {}
    int exit_code() const override { return 3; }
};

struct FormatError : IoError {
    explicit FormatError(const std::string& msg) : IoError("format: " + msg) {}
};

struct PrereqError : Error {
    explicit PrereqError(const std::string& msg) : Error("prerequisite: " + msg) {}
    int exit_code() const override { return 4; }
};

struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error("numeric: " + msg) {}
    int exit_code() const override { return 5; }
};

struct ShapeError : NumericError {
    explicit ShapeError(const std::string& msg) : NumericError("shape: " + msg) {}
};

}  // namespace trackid
