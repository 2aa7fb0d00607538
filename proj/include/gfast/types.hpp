#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfast {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

using Bits = std::vector<std::uint8_t>;

// Saturation level for every LLR that leaves a module.
inline constexpr double kLlrMax = 50.0;

inline double clamp_llr(double v) {
    if (v != v) return 0.0;
    return v > kLlrMax ? kLlrMax : (v < -kLlrMax ? -kLlrMax : v);
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class IdentifiabilityError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

} // namespace gfast
