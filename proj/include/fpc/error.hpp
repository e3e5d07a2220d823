#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fpc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DegenerateBandwidth : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class UnsupportedParameter : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Carries the node indices of every connected component.
class ConnectivityError : public InvalidInput {
public:
    ConnectivityError(std::vector<std::vector<long>> components);
    const std::vector<std::vector<long>>& components() const { return components_; }

private:
    std::vector<std::vector<long>> components_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace fpc
