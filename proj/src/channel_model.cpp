#include "risee/channel_model.hpp"

#include "risee/units.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace risee {

namespace {

cd unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

struct Direction {
  double distance;
  Vec3 unit;
};

Direction direction(const Vec3& from, const Vec3& to) {
  const Vec3 d{to[0] - from[0], to[1] - from[1], to[2] - from[2]};
  const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("geometry: coincident or non-finite positions");
  }
  return {r, {d[0] / r, d[1] / r, d[2] / r}};
}

// Azimuth in the horizontal plane and polar angle from +z, so that
// cos(az) sin(el) and sin(az) sin(el) are the x and y direction cosines.
double azimuth_of(const Vec3& u) { return std::atan2(u[1], u[0]); }
double elevation_of(const Vec3& u) { return std::acos(std::clamp(u[2], -1.0, 1.0)); }

double los_power_gain(const PathStatistics& s, double distance) {
  switch (s.gain_law) {
    case GainLaw::FreeSpace: {
      const double lambda = kSpeedOfLight / s.carrier_hz;
      const double amp = lambda / (4.0 * kPi * distance);
      return amp * amp;
    }
    case GainLaw::LogDistance:
      break;
  }
  return db_to_linear(-(s.reference_loss_db + 10.0 * s.path_loss_exponent * std::log10(distance)));
}

// Draws one link: path 0 is LoS with the given geometric angles, the rest
// are NLoS with uniform angles and Rayleigh gains.
PathSet draw_paths(int count, double distance, double dep_az, double dep_el, double arr_az,
                   double arr_el, const PathStatistics& stats, std::mt19937_64& rng) {
  if (count < 1) throw std::invalid_argument("path count must be >= 1");
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> half_turn(0.0, kPi);
  std::uniform_real_distribution<double> quarter_turn(0.0, kPi / 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double los_power = los_power_gain(stats, distance);
  const double nlos_power = los_power * db_to_linear(-stats.nlos_attenuation_db);

  PathSet p;
  p.gains.push_back(std::sqrt(los_power) * unit_phasor(phase(rng)));
  p.departure_az.push_back(dep_az);
  p.departure_el.push_back(dep_el);
  p.arrival_az.push_back(arr_az);
  p.arrival_el.push_back(arr_el);
  for (int l = 1; l < count; ++l) {
    const double re = normal(rng);
    const double im = normal(rng);
    p.gains.push_back(std::sqrt(nlos_power / 2.0) * cd(re, im));
    p.departure_az.push_back(half_turn(rng));
    p.departure_el.push_back(quarter_turn(rng));
    p.arrival_az.push_back(half_turn(rng));
    p.arrival_el.push_back(quarter_turn(rng));
  }
  return p;
}

}  // namespace

void SystemDims::validate() const {
  if (rf_chains < 1 || antennas_per_subarray < 1 || ris_rows < 1 || ris_cols < 1 || users < 1 ||
      streams_per_user < 1 || ue_antennas < 1) {
    throw std::invalid_argument("SystemDims: all counts must be >= 1");
  }
  if (streams_per_user * users > rf_chains) {
    throw std::invalid_argument("SystemDims: L*K must not exceed the number of RF chains M");
  }
  if (streams_per_user > ue_antennas) {
    throw std::invalid_argument("SystemDims: L must not exceed N_R");
  }
  if (subarray_spacing < 0.0 || !std::isfinite(subarray_spacing)) {
    throw std::invalid_argument("SystemDims: subarray spacing must be finite and >= 0");
  }
}

void PathSet::validate() const {
  const std::size_t n = gains.size();
  if (n < 1) throw std::invalid_argument("PathSet: at least one path required");
  if (departure_az.size() != n || departure_el.size() != n || arrival_az.size() != n ||
      arrival_el.size() != n) {
    throw std::invalid_argument("PathSet: inconsistent path counts");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(gains[i].real()) || !std::isfinite(gains[i].imag()) ||
        !std::isfinite(departure_az[i]) || !std::isfinite(departure_el[i]) ||
        !std::isfinite(arrival_az[i]) || !std::isfinite(arrival_el[i])) {
      throw std::invalid_argument("PathSet: non-finite gain or angle");
    }
  }
}

Eigen::VectorXcd bs_steering(const SystemDims& dims, double phi) {
  const int m_count = dims.rf_chains;
  const int n_count = dims.antennas_per_subarray;
  const double spacing = dims.effective_subarray_spacing();
  const double c = std::cos(phi);
  Eigen::VectorXcd v(m_count * n_count);
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < n_count; ++n) {
      v(m * n_count + n) = unit_phasor(kPi * (n + m * spacing) * c);
    }
  }
  return v;
}

Eigen::VectorXcd ris_steering(int rows, int cols, double azimuth, double elevation) {
  const double cx = std::cos(azimuth) * std::sin(elevation);
  const double cy = std::sin(azimuth) * std::sin(elevation);
  Eigen::VectorXcd v(rows * cols);
  for (int ny = 0; ny < cols; ++ny) {
    for (int nx = 0; nx < rows; ++nx) {
      v(ny * rows + nx) = unit_phasor(kPi * (nx * cx + ny * cy));
    }
  }
  return v;
}

Eigen::VectorXcd ue_steering(int antennas, double xi) {
  const double c = std::cos(xi);
  Eigen::VectorXcd v(antennas);
  for (int i = 0; i < antennas; ++i) v(i) = unit_phasor(kPi * i * c);
  return v;
}

Eigen::MatrixXcd khatri_rao(const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right) {
  if (left.cols() != right.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ");
  }
  const Eigen::Index lr = left.rows();
  const Eigen::Index rr = right.rows();
  Eigen::MatrixXcd out(lr * rr, left.cols());
  for (Eigen::Index n = 0; n < left.cols(); ++n) {
    for (Eigen::Index p = 0; p < lr; ++p) {
      out.col(n).segment(p * rr, rr) = left(p, n) * right.col(n);
    }
  }
  return out;
}

Eigen::MatrixXcd bs_ris_channel(const SystemDims& dims, const PathSet& paths) {
  paths.validate();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dims.ris_elements(), dims.bs_antennas());
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const Eigen::VectorXcd a_ris =
        ris_steering(dims.ris_rows, dims.ris_cols, paths.arrival_az[l], paths.arrival_el[l]);
    const Eigen::VectorXcd a_bs = bs_steering(dims, paths.departure_az[l]);
    h.noalias() += paths.gains[l] * a_ris * a_bs.adjoint();
  }
  return h;
}

Eigen::MatrixXcd ris_ue_channel(const SystemDims& dims, const PathSet& paths) {
  paths.validate();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dims.ue_antennas, dims.ris_elements());
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const Eigen::VectorXcd a_ue = ue_steering(dims.ue_antennas, paths.arrival_az[l]);
    const Eigen::VectorXcd a_ris =
        ris_steering(dims.ris_rows, dims.ris_cols, paths.departure_az[l], paths.departure_el[l]);
    h.noalias() += paths.gains[l] * a_ue * a_ris.adjoint();
  }
  return h;
}

ChannelRealization assemble_channels(const SystemDims& dims, Eigen::MatrixXcd bs_ris,
                                     std::vector<Eigen::MatrixXcd> ris_ue) {
  dims.validate();
  if (bs_ris.rows() != dims.ris_elements() || bs_ris.cols() != dims.bs_antennas()) {
    throw std::invalid_argument("assemble_channels: BS-RIS shape mismatch");
  }
  if (static_cast<int>(ris_ue.size()) != dims.users) {
    throw std::invalid_argument("assemble_channels: one RIS-UE channel per user required");
  }
  ChannelRealization ch;
  ch.dims = dims;
  ch.bs_ris = std::move(bs_ris);
  ch.ris_ue = std::move(ris_ue);
  const Eigen::MatrixXcd ht_t = ch.bs_ris.transpose();
  for (const auto& hr : ch.ris_ue) {
    if (hr.rows() != dims.ue_antennas || hr.cols() != dims.ris_elements()) {
      throw std::invalid_argument("assemble_channels: RIS-UE shape mismatch");
    }
    ch.cascaded.push_back(khatri_rao(ht_t, hr));
  }
  ch.estimated = ch.cascaded;
  ch.error_radius.assign(dims.users, 0.0);
  return ch;
}

ChannelRealization synthesize_channels(const SystemDims& dims, const Geometry& geometry,
                                       const PathStatistics& stats, std::uint64_t seed) {
  dims.validate();
  if (static_cast<int>(geometry.users.size()) != dims.users) {
    throw std::invalid_argument("synthesize_channels: one position per user required");
  }
  std::mt19937_64 rng(seed);

  const Direction bs_to_ris = direction(geometry.bs, geometry.ris);
  const Direction ris_to_bs = direction(geometry.ris, geometry.bs);
  const PathSet bs_paths =
      draw_paths(stats.bs_ris_paths, bs_to_ris.distance, std::acos(bs_to_ris.unit[0]), 0.0,
                 azimuth_of(ris_to_bs.unit), elevation_of(ris_to_bs.unit), stats, rng);
  Eigen::MatrixXcd ht = bs_ris_channel(dims, bs_paths);

  std::vector<Eigen::MatrixXcd> hr;
  hr.reserve(dims.users);
  for (const Vec3& ue : geometry.users) {
    const Direction ris_to_ue = direction(geometry.ris, ue);
    const Direction ue_to_ris = direction(ue, geometry.ris);
    const PathSet paths = draw_paths(stats.ris_ue_paths, ris_to_ue.distance,
                                     azimuth_of(ris_to_ue.unit), elevation_of(ris_to_ue.unit),
                                     std::acos(ue_to_ris.unit[0]), 0.0, stats, rng);
    hr.push_back(ris_ue_channel(dims, paths));
  }
  return assemble_channels(dims, std::move(ht), std::move(hr));
}

Eigen::MatrixXcd project_frobenius_ball(const Eigen::MatrixXcd& x, double radius) {
  const double n = x.norm();
  if (n <= radius || n == 0.0) return x;
  return x * (radius / n);
}

ChannelRealization apply_csi_error(const ChannelRealization& ch, double beta, std::uint64_t seed,
                                   ErrorSampling mode) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument(
        "apply_csi_error: beta must lie in [0, 1) so that ||Hhat_k||_F >= delta_k");
  }
  ChannelRealization out = ch;
  const int users = ch.dims.users;
  out.error_radius.assign(users, 0.0);
  out.error.assign(users, Eigen::MatrixXcd());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  for (int k = 0; k < users; ++k) {
    const Eigen::MatrixXcd& h = ch.cascaded[k];
    Eigen::MatrixXcd dir(h.rows(), h.cols());
    for (Eigen::Index j = 0; j < dir.cols(); ++j) {
      for (Eigen::Index i = 0; i < dir.rows(); ++i) dir(i, j) = cd(normal(rng), normal(rng));
    }
    const double dn = dir.norm();
    if (dn > 0.0) dir /= dn;
    double t = 1.0;
    if (mode == ErrorSampling::UniformBall) {
      t = std::pow(uniform(rng), 1.0 / (2.0 * static_cast<double>(h.size())));
    }

    // delta^2 (1 - beta^2 t^2) + 2 beta^2 t Re<H,U> delta - beta^2 ||H||^2 = 0
    const double b2 = beta * beta;
    const double qa = 1.0 - b2 * t * t;
    const double qb = 2.0 * b2 * t * (h.array().conjugate() * dir.array()).sum().real();
    const double qc = -b2 * h.squaredNorm();
    double delta = 0.0;
    if (beta > 0.0) delta = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);

    out.error[k] = (t * delta) * dir;
    out.estimated[k] = h - out.error[k];
    out.error_radius[k] = delta;
  }
  return out;
}

Eigen::MatrixXcd devectorize(const Eigen::VectorXcd& v, int rows) {
  if (rows <= 0 || v.size() % rows != 0) {
    throw std::invalid_argument("devectorize: length is not a multiple of rows");
  }
  return Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, v.size() / rows);
}

Eigen::MatrixXcd effective_channel(const ChannelRealization& ch, const Eigen::VectorXcd& theta,
                                   int user, bool estimated) {
  if (theta.size() != ch.dims.ris_elements()) {
    throw std::invalid_argument("effective_channel: theta length mismatch");
  }
  for (Eigen::Index n = 0; n < theta.size(); ++n) {
    if (std::abs(std::abs(theta(n)) - 1.0) > 1e-9) {
      throw std::invalid_argument("effective_channel: theta must be unit-modulus");
    }
  }
  if (user < 0 || user >= ch.dims.users) throw std::out_of_range("effective_channel: user");
  if (estimated) {
    return devectorize(ch.estimated[user] * theta, ch.dims.ue_antennas);
  }
  return ch.ris_ue[user] * theta.asDiagonal() * ch.bs_ris;
}

}  // namespace risee
