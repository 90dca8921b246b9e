#include "qim/measurements.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>

#include "qim/error.hpp"
#include "qim/rng.hpp"

namespace qim {

const char* to_string(Field field) {
  return field == Field::Real ? "real" : "complex";
}

const char* to_string(EnsembleKind kind) {
  return kind == EnsembleKind::Cdp ? "cdp" : "explicit-gaussian";
}

namespace detail {

namespace {
// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwBuffer {
  explicit FftwBuffer(Index size)
      : data(fftw_alloc_complex(static_cast<std::size_t>(size))) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};
}  // namespace

/// Forward/backward unnormalised DFT plans of one length.
class FourierPlan {
 public:
  explicit FourierPlan(Index n) : n_(n) {
    FftwBuffer in(n), out(n);
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data,
                                FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data,
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FourierPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FourierPlan(const FourierPlan&) = delete;
  FourierPlan& operator=(const FourierPlan&) = delete;

  // in/out must come from fftw_alloc_complex (alignment matches the plan).
  void forward(fftw_complex* in, fftw_complex* out) const {
    fftw_execute_dft(forward_, in, out);
  }
  void backward(fftw_complex* in, fftw_complex* out) const {
    fftw_execute_dft(backward_, in, out);
  }
  Index size() const { return n_; }

 private:
  Index n_;
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace detail

namespace {

void require_positive(Index n, Index m) {
  if (n <= 0 || m <= 0) {
    throw QimError(ErrorCode::ZeroDimension,
                   "n=" + std::to_string(n) + " m=" + std::to_string(m));
  }
}

}  // namespace

SensingEnsemble SensingEnsemble::gaussian(Index n, Index m, Field field,
                                          std::uint64_t seed) {
  require_positive(n, m);
  SensingEnsemble e;
  e.kind_ = EnsembleKind::ExplicitGaussian;
  e.field_ = field;
  e.n_ = n;
  e.m_ = m;
  e.seed_ = seed;
  Rng rng(seed);
  // Drawn row by row so that a prefix of rows does not depend on m.
  if (field == Field::Real) {
    e.real_rows_.resize(m, n);
    for (Index k = 0; k < m; ++k)
      for (Index j = 0; j < n; ++j) e.real_rows_(k, j) = rng.normal();
  } else {
    e.complex_rows_.resize(m, n);
    for (Index k = 0; k < m; ++k)
      for (Index j = 0; j < n; ++j)
        e.complex_rows_(k, j) = rng.complex_normal(0.5);
  }
  return e;
}

Eigen::MatrixXcd octanary_masks(Index patterns, Index n, std::uint64_t seed) {
  static const std::complex<double> kUnits[4] = {
      {1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  const double low = 1.0 / std::sqrt(2.0);
  const double high = std::sqrt(3.0);
  Rng rng(seed);
  Eigen::MatrixXcd masks(patterns, n);
  for (Index l = 0; l < patterns; ++l) {
    for (Index j = 0; j < n; ++j) {
      const auto unit = kUnits[rng.next_u64() >> 62];
      const double magnitude = rng.uniform() < 0.8 ? low : high;
      masks(l, j) = unit * magnitude;
    }
  }
  return masks;
}

SensingEnsemble SensingEnsemble::cdp(Index n, Index patterns,
                                     std::uint64_t seed) {
  require_positive(n, patterns);
  return from_masks(octanary_masks(patterns, n, seed), seed);
}

SensingEnsemble SensingEnsemble::from_rows(Eigen::MatrixXd rows,
                                           std::uint64_t seed) {
  require_positive(rows.cols(), rows.rows());
  SensingEnsemble e;
  e.kind_ = EnsembleKind::ExplicitGaussian;
  e.field_ = Field::Real;
  e.n_ = rows.cols();
  e.m_ = rows.rows();
  e.seed_ = seed;
  e.real_rows_ = std::move(rows);
  return e;
}

SensingEnsemble SensingEnsemble::from_rows(Eigen::MatrixXcd rows,
                                           std::uint64_t seed) {
  require_positive(rows.cols(), rows.rows());
  SensingEnsemble e;
  e.kind_ = EnsembleKind::ExplicitGaussian;
  e.field_ = Field::Complex;
  e.n_ = rows.cols();
  e.m_ = rows.rows();
  e.seed_ = seed;
  e.complex_rows_ = std::move(rows);
  return e;
}

SensingEnsemble SensingEnsemble::from_masks(Eigen::MatrixXcd masks,
                                            std::uint64_t seed) {
  require_positive(masks.cols(), masks.rows());
  SensingEnsemble e;
  e.kind_ = EnsembleKind::Cdp;
  e.field_ = Field::Complex;
  e.n_ = masks.cols();
  e.m_ = masks.rows() * masks.cols();
  e.seed_ = seed;
  e.masks_ = std::move(masks);
  e.plan_ = std::make_shared<const detail::FourierPlan>(e.n_);
  return e;
}

void SensingEnsemble::check_signal(Index size) const {
  if (size != n_) {
    throw QimError(ErrorCode::DimensionMismatch,
                   "signal has " + std::to_string(size) + " entries, n=" +
                       std::to_string(n_));
  }
}

void SensingEnsemble::check_measurements(Index size) const {
  if (size != m_) {
    throw QimError(ErrorCode::DimensionMismatch,
                   "measurement vector has " + std::to_string(size) +
                       " entries, m=" + std::to_string(m_));
  }
}

Vector SensingEnsemble::forward(const Vector& u) const {
  check_signal(u.size());
  if (kind_ == EnsembleKind::ExplicitGaussian) {
    if (field_ == Field::Real) {
      const RealVector re = real_rows_ * u.real();
      return re.cast<std::complex<double>>();
    }
    return complex_rows_ * u;
  }
  detail::FftwBuffer in(n_), out(n_);
  auto* in_c = reinterpret_cast<std::complex<double>*>(in.data);
  auto* out_c = reinterpret_cast<std::complex<double>*>(out.data);
  Vector z(m_);
  for (Index l = 0; l < masks_.rows(); ++l) {
    for (Index j = 0; j < n_; ++j) in_c[j] = masks_(l, j) * u[j];
    plan_->forward(in.data, out.data);
    for (Index j = 0; j < n_; ++j) z[l * n_ + j] = out_c[j];
  }
  return z;
}

Vector SensingEnsemble::adjoint(const Vector& v) const {
  check_measurements(v.size());
  if (kind_ == EnsembleKind::ExplicitGaussian) {
    if (field_ == Field::Real) {
      const RealVector re = real_rows_.transpose() * v.real();
      return re.cast<std::complex<double>>();
    }
    return complex_rows_.adjoint() * v;
  }
  // The adjoint of the unnormalised forward DFT is the unnormalised backward
  // DFT.
  detail::FftwBuffer in(n_), out(n_);
  auto* in_c = reinterpret_cast<std::complex<double>*>(in.data);
  auto* out_c = reinterpret_cast<std::complex<double>*>(out.data);
  Vector u = Vector::Zero(n_);
  for (Index l = 0; l < masks_.rows(); ++l) {
    for (Index j = 0; j < n_; ++j) in_c[j] = v[l * n_ + j];
    plan_->backward(in.data, out.data);
    for (Index j = 0; j < n_; ++j) u[j] += std::conj(masks_(l, j)) * out_c[j];
  }
  return u;
}

RealVector SensingEnsemble::forward_real(const RealVector& u) const {
  check_signal(u.size());
  if (kind_ != EnsembleKind::ExplicitGaussian || field_ != Field::Real) {
    throw QimError(ErrorCode::DomainError, "real fast path needs real rows");
  }
  return real_rows_ * u;
}

RealVector SensingEnsemble::adjoint_real(const RealVector& v) const {
  check_measurements(v.size());
  if (kind_ != EnsembleKind::ExplicitGaussian || field_ != Field::Real) {
    throw QimError(ErrorCode::DomainError, "real fast path needs real rows");
  }
  return real_rows_.transpose() * v;
}

Eigen::MatrixXcd SensingEnsemble::dense_matrix() const {
  if (kind_ == EnsembleKind::ExplicitGaussian) {
    if (field_ == Field::Real) return real_rows_.cast<std::complex<double>>();
    return complex_rows_;
  }
  const double pi = std::acos(-1.0);
  Eigen::MatrixXcd a(m_, n_);
  for (Index l = 0; l < masks_.rows(); ++l) {
    for (Index k = 0; k < n_; ++k) {
      for (Index j = 0; j < n_; ++j) {
        // Reduce the exponent modulo n to keep the angle small.
        const double angle =
            -2.0 * pi * static_cast<double>((k * j) % n_) / static_cast<double>(n_);
        a(l * n_ + k, j) = std::polar(1.0, angle) * masks_(l, j);
      }
    }
  }
  return a;
}

IntensityData intensities(const SensingEnsemble& ensemble, const Vector& x) {
  IntensityData data;
  if (ensemble.kind() == EnsembleKind::ExplicitGaussian &&
      ensemble.field() == Field::Real) {
    if (x.size() != ensemble.n()) {
      throw QimError(ErrorCode::DimensionMismatch, "intensities: dim(x) != n");
    }
    data.y = ensemble.forward_real(x.real()).array().square().matrix();
  } else {
    data.y = ensemble.forward(x).cwiseAbs2();
  }
  return data;
}

IntensityData add_amplitude_noise(const SensingEnsemble& ensemble,
                                  const Vector& x, double target_snr_db,
                                  std::uint64_t seed) {
  if (std::isnan(target_snr_db) || target_snr_db == -kNoiselessSnr) {
    throw QimError(ErrorCode::DomainError, "target SNR must be finite or +inf");
  }
  IntensityData clean = intensities(ensemble, x);
  const double signal_energy = clean.y.sum();
  if (!(signal_energy > 0.0)) {
    throw QimError(ErrorCode::ZeroSignal, "noise model needs x != 0");
  }
  const Eigen::VectorXd amplitude = clean.y.cwiseSqrt();
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(ensemble.m());
  if (target_snr_db != kNoiselessSnr) {
    Rng rng(seed);
    for (Index k = 0; k < eta.size(); ++k) eta[k] = rng.normal();
    const double target_energy =
        signal_energy / std::pow(10.0, target_snr_db / 10.0);
    eta *= std::sqrt(target_energy) / eta.norm();
  }
  IntensityData data;
  data.amplitudes = amplitude + eta;
  data.y.resize(ensemble.m());
  for (Index k = 0; k < eta.size(); ++k) {
    double b = (*data.amplitudes)[k];
    if (b < 0.0) {
      b = 0.0;
      ++data.clamped;
    }
    data.y[k] = b * b;
  }
  data.noise = std::move(eta);
  return data;
}

double realized_snr_db(const SensingEnsemble& ensemble, const Vector& x,
                       const IntensityData& data) {
  const double signal_energy = intensities(ensemble, x).y.sum();
  if (!data.noise) return kNoiselessSnr;
  const double noise_energy = data.noise->squaredNorm();
  if (noise_energy == 0.0) return kNoiselessSnr;
  return 10.0 * std::log10(signal_energy / noise_energy);
}

Vector random_signal(Index n, Field field, std::uint64_t seed) {
  if (n <= 0) throw QimError(ErrorCode::ZeroDimension, "random_signal: n=0");
  Rng rng(seed);
  Vector x(n);
  for (Index j = 0; j < n; ++j) {
    x[j] = field == Field::Real ? std::complex<double>(rng.normal(), 0.0)
                                : rng.complex_normal(1.0);
  }
  return x;
}

}  // namespace qim
