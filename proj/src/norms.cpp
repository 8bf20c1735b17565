#include "favard/norms.hpp"

#include <cmath>

#include "favard/errors.hpp"

namespace favard {

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::euclidean:
      return "euclidean";
    case NormKind::sup:
      return "sup";
    case NormKind::delay_sum:
      return "delay_sum";
  }
  return "euclidean";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "euclidean") return NormKind::euclidean;
  if (text == "sup") return NormKind::sup;
  if (text == "delay_sum") return NormKind::delay_sum;
  throw ValidationError("norm_kind", "unknown norm '" + std::string(text) + "'");
}

double StateNorm::operator()(const Vector& v) const {
  switch (kind) {
    case NormKind::euclidean:
      return v.norm();
    case NormKind::sup:
      return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    case NormKind::delay_sum: {
      const Eigen::Index n = block > 0 ? block : v.size();
      double total = 0.0;
      for (Eigen::Index start = 0; start < v.size(); start += n) {
        total += v.segment(start, std::min(n, v.size() - start)).norm();
      }
      return total;
    }
  }
  return v.norm();
}

double StateNorm::distance(const Vector& a, const Vector& b) const {
  switch (kind) {
    case NormKind::euclidean:
      return (a - b).norm();
    case NormKind::sup:
      return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
    case NormKind::delay_sum: {
      const Eigen::Index n = block > 0 ? block : a.size();
      double total = 0.0;
      for (Eigen::Index start = 0; start < a.size(); start += n) {
        const Eigen::Index len = std::min(n, a.size() - start);
        total += (a.segment(start, len) - b.segment(start, len)).norm();
      }
      return total;
    }
  }
  return (a - b).norm();
}

Vector StateNorm::subgradient(const Vector& v) const {
  Vector g = Vector::Zero(v.size());
  switch (kind) {
    case NormKind::euclidean: {
      const double len = v.norm();
      if (len > 0.0) g = v / len;
      break;
    }
    case NormKind::sup: {
      if (v.size() == 0) break;
      Eigen::Index idx = 0;
      v.cwiseAbs().maxCoeff(&idx);
      if (v[idx] != 0.0) g[idx] = v[idx] > 0.0 ? 1.0 : -1.0;
      break;
    }
    case NormKind::delay_sum: {
      const Eigen::Index n = block > 0 ? block : v.size();
      for (Eigen::Index start = 0; start < v.size(); start += n) {
        const Eigen::Index len = std::min(n, v.size() - start);
        const double seg = v.segment(start, len).norm();
        if (seg > 0.0) g.segment(start, len) = v.segment(start, len) / seg;
      }
      break;
    }
  }
  return g;
}

}  // namespace favard
