#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace risee {

using cd = std::complex<double>;
using Vec3 = std::array<double, 3>;

/// Array and stream dimensions of the downlink.
///
/// The BS has `rf_chains` subarrays of `antennas_per_subarray` elements
/// (array-of-subarrays). The RIS is an `ris_rows` x `ris_cols` planar array.
/// Each of the `users` receives `streams_per_user` streams on
/// `ue_antennas` antennas.
struct SystemDims {
  int rf_chains = 4;
  int antennas_per_subarray = 2;
  int ris_rows = 4;
  int ris_cols = 4;
  int users = 3;
  int streams_per_user = 1;
  int ue_antennas = 2;
  /// Spacing between the first elements of adjacent subarrays, in half
  /// wavelengths. Zero selects the contiguous layout (equal to
  /// `antennas_per_subarray`).
  double subarray_spacing = 0.0;

  int bs_antennas() const { return rf_chains * antennas_per_subarray; }
  int ris_elements() const { return ris_rows * ris_cols; }
  int total_streams() const { return users * streams_per_user; }
  double effective_subarray_spacing() const {
    return subarray_spacing > 0.0 ? subarray_spacing
                                  : static_cast<double>(antennas_per_subarray);
  }

  /// Throws std::invalid_argument unless all counts are positive,
  /// L*K <= M and L <= N_R.
  void validate() const;
};

/// Propagation paths of one link. Index 0 is the line-of-sight path.
struct PathSet {
  std::vector<cd> gains;
  std::vector<double> departure_az;  // BS AoD, or RIS azimuth AoD
  std::vector<double> departure_el;  // RIS elevation AoD (unused at the BS)
  std::vector<double> arrival_az;    // RIS azimuth AoA, or UE AoA
  std::vector<double> arrival_el;    // RIS elevation AoA (unused at the UE)

  std::size_t size() const { return gains.size(); }
  void validate() const;
};

enum class GainLaw {
  LogDistance,  // PL(d) = PL0 + 10 * exponent * log10(d / 1 m)
  FreeSpace,    // (lambda / (4 pi d))^2
};

struct PathStatistics {
  int bs_ris_paths = 4;  // 1 LoS + 3 NLoS
  int ris_ue_paths = 4;
  double nlos_attenuation_db = 10.0;
  GainLaw gain_law = GainLaw::LogDistance;
  double reference_loss_db = 20.0;
  double path_loss_exponent = 2.0;
  double carrier_hz = 28e9;
};

struct Geometry {
  Vec3 bs{0.0, 0.0, 10.0};
  Vec3 ris{15.0, -15.0, 5.0};
  std::vector<Vec3> users;
};

/// True and estimated channels of one realization.
///
/// `cascaded[k]` is the Khatri-Rao product H_T^T (.) H_R[k], of shape
/// (N_R * M * N_T) x N_RIS, so that vec(H_R[k] diag(theta) H_T) equals
/// cascaded[k] * theta with column-major vec. `estimated[k]` is what the BS
/// believes; `error[k]` (possibly empty) is cascaded[k] - estimated[k].
struct ChannelRealization {
  SystemDims dims;
  Eigen::MatrixXcd bs_ris;               // N_RIS x (M N_T)
  std::vector<Eigen::MatrixXcd> ris_ue;  // N_R x N_RIS per user
  std::vector<Eigen::MatrixXcd> cascaded;
  std::vector<Eigen::MatrixXcd> estimated;
  std::vector<double> error_radius;  // delta_k, Frobenius units
  std::vector<Eigen::MatrixXcd> error;

  bool has_error_matrices() const { return !error.empty(); }
};

enum class ErrorSampling {
  UniformBall,  // uniform in the Frobenius ball
  Boundary,     // on the sphere of radius delta_k
};

/// BS ULA response: entry (m, n) is exp(j pi ((n-1) + (m-1) d_SA) cos phi),
/// ordered n-fastest within subarray blocks.
Eigen::VectorXcd bs_steering(const SystemDims& dims, double phi);

/// RIS UPA response, row index fastest.
Eigen::VectorXcd ris_steering(int rows, int cols, double azimuth, double elevation);

/// UE ULA response.
Eigen::VectorXcd ue_steering(int antennas, double xi);

/// Columnwise Kronecker product: column n is kron(left.col(n), right.col(n)).
Eigen::MatrixXcd khatri_rao(const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right);

Eigen::MatrixXcd bs_ris_channel(const SystemDims& dims, const PathSet& paths);
Eigen::MatrixXcd ris_ue_channel(const SystemDims& dims, const PathSet& paths);

/// Draws path sets from the geometry, builds H_T, H_R[k] and the cascaded
/// channels. The estimate is initialised to the true channel with zero error
/// radius. Deterministic in `seed`.
ChannelRealization synthesize_channels(const SystemDims& dims, const Geometry& geometry,
                                       const PathStatistics& stats, std::uint64_t seed);

/// Assembles a realization from explicit link matrices (no randomness).
ChannelRealization assemble_channels(const SystemDims& dims, Eigen::MatrixXcd bs_ris,
                                     std::vector<Eigen::MatrixXcd> ris_ue);

/// Models bounded CSI error with delta_k = beta * ||Hhat_k||_F.
///
/// A direction is drawn with i.i.d. complex Gaussian entries and a radial
/// fraction t (t = 1 for Boundary), and delta_k is the positive root of
/// delta^2 = beta^2 ||H_k - t delta U||_F^2, so the relation to the estimate
/// holds exactly. Throws std::invalid_argument for beta outside [0, 1).
ChannelRealization apply_csi_error(const ChannelRealization& ch, double beta, std::uint64_t seed,
                                   ErrorSampling mode = ErrorSampling::UniformBall);

/// Scales `x` onto the Frobenius ball of the given radius (no-op inside).
Eigen::MatrixXcd project_frobenius_ball(const Eigen::MatrixXcd& x, double radius);

/// Overall channel H_R[k] diag(theta) H_T (N_R x M N_T). With `estimated`
/// set, reconstructs it from estimated[k] * theta instead. Throws if theta is
/// not unit-modulus.
Eigen::MatrixXcd effective_channel(const ChannelRealization& ch, const Eigen::VectorXcd& theta,
                                   int user, bool estimated);

/// Inverse of column-major vec for an `rows` x (v.size() / rows) matrix.
Eigen::MatrixXcd devectorize(const Eigen::VectorXcd& v, int rows);

}  // namespace risee
