#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace imba {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXr = Matrix<double>;
using VectorXr = Vector<double>;
using CountMatrix = Matrix<std::int64_t>;

enum class ErrorKind {
  InvalidSpec,
  OutOfModel,
  OutOfRange,
  DegenerateGroup,
  DegenerateScale,
  Unsupported,
  InvalidProfile,
  DimensionMismatch,
  TrainingDiverged,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid spec";
    case ErrorKind::OutOfModel: return "out of model";
    case ErrorKind::OutOfRange: return "out of range";
    case ErrorKind::DegenerateGroup: return "degenerate group";
    case ErrorKind::DegenerateScale: return "degenerate scale";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::InvalidProfile: return "invalid profile";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::TrainingDiverged: return "training diverged";
    case ErrorKind::InvalidConfig: return "invalid config";
    case ErrorKind::Io: return "io";
  }
  return "error";
}

}  // namespace imba
