#pragma once

#include <stdexcept>
#include <string>

namespace netslab {

// Bad user input (files, ids, dimensions). CLI maps this to exit code 2.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (wrong slot kind, inconsistent state). Programming error, not data.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

// Non-finite intermediates, failed factorizations. CLI maps this to exit code 4.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace netslab
