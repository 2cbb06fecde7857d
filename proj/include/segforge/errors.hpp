#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace segforge {

// Error category; drives the process exit code (config 2, data 3, model 4).
enum class ErrorKind { Config, Data, Model };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::Config: return 2;
            case ErrorKind::Data: return 3;
            case ErrorKind::Model: return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error config_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Config, std::move(code), message);
}

inline Error data_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Data, std::move(code), message);
}

inline Error model_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Model, std::move(code), message);
}

}  // namespace segforge
