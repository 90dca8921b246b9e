#include "qim/rng.hpp"

#include <cmath>

#include "qim/error.hpp"

namespace qim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::complex<double> Rng::complex_normal(double part_variance) {
  const double sd = std::sqrt(part_variance);
  const double re = normal();
  const double im = normal();
  return {sd * re, sd * im};
}

}  // namespace qim
