#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace fmalign {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Class identifier. Negative values mean "unlabeled".
using Label = std::int32_t;
inline constexpr Label kUnlabeled = -1;

enum class Domain : std::uint8_t { source = 0, target = 1 };

inline const char* to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (maps to a usage error at the CLI).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
  using Error::Error;
};

/// A numerical stage could not produce a valid result.
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace fmalign
