#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace favard {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class NormKind { euclidean, sup, delay_sum };

std::string to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view text);

/// Norm on the state space. For delay_sum the state is a stack of
/// history blocks of size `block` and the norm is the sum of their
/// Euclidean lengths.
struct StateNorm {
  NormKind kind = NormKind::euclidean;
  int block = 0;

  double operator()(const Vector& v) const;

  /// |a - b| without materializing the difference.
  double distance(const Vector& a, const Vector& b) const;

  /// An element of the subdifferential at v (zero vector at the origin).
  Vector subgradient(const Vector& v) const;
};

}  // namespace favard
