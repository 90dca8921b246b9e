#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>

#include <Eigen/Dense>

namespace qim {

using Index = Eigen::Index;

/// Signals and measurement vectors are stored complex. For Field::Real the
/// imaginary parts are zero and every operation keeps them zero.
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

enum class Field { Real, Complex };
enum class EnsembleKind { ExplicitGaussian, Cdp };

const char* to_string(Field field);
const char* to_string(EnsembleKind kind);

namespace detail {
class FourierPlan;
}

/// Linear measurement operator u -> (a_k . u)_k, k = 0..m-1.
///
/// The explicit kind stores the m x n matrix of rows. The coded-diffraction
/// kind stores L masks and applies z = [F D_1 u; ...; F D_L u] where F is the
/// unnormalised DFT, so E|z_k|^2 = ||u||^2 just like the Gaussian rows.
///
/// Instances are immutable after construction and may be shared between
/// threads; forward() and adjoint() are reentrant.
class SensingEnsemble {
 public:
  static SensingEnsemble gaussian(Index n, Index m, Field field,
                                  std::uint64_t seed);
  static SensingEnsemble cdp(Index n, Index patterns, std::uint64_t seed);

  // Fixtures with caller-provided rows or masks.
  static SensingEnsemble from_rows(Eigen::MatrixXd rows,
                                   std::uint64_t seed = 0);
  static SensingEnsemble from_rows(Eigen::MatrixXcd rows,
                                   std::uint64_t seed = 0);
  static SensingEnsemble from_masks(Eigen::MatrixXcd masks,
                                    std::uint64_t seed = 0);

  EnsembleKind kind() const { return kind_; }
  Field field() const { return field_; }
  Index n() const { return n_; }
  Index m() const { return m_; }
  Index patterns() const { return kind_ == EnsembleKind::Cdp ? masks_.rows() : 0; }
  std::uint64_t seed() const { return seed_; }

  /// Explicit real rows (m x n); empty unless kind is explicit and real.
  const Eigen::MatrixXd& real_rows() const { return real_rows_; }
  /// Explicit complex rows (m x n); empty unless kind is explicit and complex.
  const Eigen::MatrixXcd& complex_rows() const { return complex_rows_; }
  /// CDP masks (L x n); empty unless kind is cdp.
  const Eigen::MatrixXcd& masks() const { return masks_; }

  Vector forward(const Vector& u) const;
  /// A^H v.
  Vector adjoint(const Vector& v) const;

  // Real fast paths, only valid for explicit real ensembles.
  RealVector forward_real(const RealVector& u) const;
  RealVector adjoint_real(const RealVector& v) const;

  /// The operator as a dense m x n matrix (cdp: built from masks and the DFT).
  Eigen::MatrixXcd dense_matrix() const;

 private:
  SensingEnsemble() = default;
  void check_signal(Index size) const;
  void check_measurements(Index size) const;

  EnsembleKind kind_ = EnsembleKind::ExplicitGaussian;
  Field field_ = Field::Real;
  Index n_ = 0;
  Index m_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd real_rows_;
  Eigen::MatrixXcd complex_rows_;
  Eigen::MatrixXcd masks_;
  std::shared_ptr<const detail::FourierPlan> plan_;
};

/// Octanary CDP symbol: uniform in {1,-1,i,-i} times 1/sqrt(2) (prob 4/5)
/// or sqrt(3) (prob 1/5). E|d|^2 = 1.
Eigen::MatrixXcd octanary_masks(Index patterns, Index n, std::uint64_t seed);

struct IntensityData {
  Eigen::VectorXd y;
  /// Noisy amplitudes |a_k . x| + eta_k before clamping (noisy model only).
  std::optional<Eigen::VectorXd> amplitudes;
  /// The rescaled noise draw eta (noisy model only).
  std::optional<Eigen::VectorXd> noise;
  /// Number of noisy amplitudes clamped to zero before squaring.
  std::size_t clamped = 0;

  double mean() const { return y.size() ? y.mean() : 0.0; }
};

IntensityData intensities(const SensingEnsemble& ensemble, const Vector& x);

/// Use as target_snr_db for the noiseless limit.
inline constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

/// y_k = max(|a_k . x| + eta_k, 0)^2 with Gaussian eta rescaled so that
/// 10 log10(sum |a_k . x|^2 / ||eta||^2) equals target_snr_db exactly.
IntensityData add_amplitude_noise(const SensingEnsemble& ensemble,
                                  const Vector& x, double target_snr_db,
                                  std::uint64_t seed);

/// 10 log10(sum |a_k . x|^2 / ||eta||^2) recomputed from stored noise.
double realized_snr_db(const SensingEnsemble& ensemble, const Vector& x,
                       const IntensityData& data);

/// Ground-truth signal: N(0, I_n), or N(0, I_n) + i N(0, I_n) for complex.
Vector random_signal(Index n, Field field, std::uint64_t seed);

}  // namespace qim
