#include "risee/channel_model.hpp"
#include "risee/units.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace risee;

namespace {

Eigen::VectorXcd random_phases(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::polar(1.0, u(rng));
  return v;
}

Eigen::MatrixXcd gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = {g(rng), g(rng)};
  return m;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

SystemDims desk() { return SystemDims{}; }

Geometry desk_geometry() {
  Geometry g;
  g.users = {{20.0, -5.0, 1.0}, {25.0, 5.0, 1.5}, {28.0, 10.0, 0.5}};
  return g;
}

bool unit_modulus(const Eigen::VectorXcd& v) {
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(std::abs(v(i)) - 1.0) > 1e-15) return false;
  return true;
}

}  // namespace

TEST_SUITE("channel_model") {

TEST_CASE("dims validation") {
  SystemDims d;
  CHECK_NOTHROW(d.validate());
  d.users = 5;  // L*K > M
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = SystemDims{};
  d.streams_per_user = 3;
  d.users = 1;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);  // L > N_R
  d = SystemDims{};
  d.ris_cols = 0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("BS steering vector") {
  SystemDims d;
  d.rf_chains = 1;
  d.antennas_per_subarray = 2;
  d.users = 1;
  const Eigen::VectorXcd v = bs_steering(d, 0.0);
  CHECK(std::abs(v(0) - cd(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(v(1) - cd(-1.0, 0.0)) < 1e-15);

  const Eigen::VectorXcd broadside = bs_steering(desk(), kPi / 2);
  CHECK((broadside - Eigen::VectorXcd::Ones(broadside.size())).norm() < 1e-14);

  // Two subarrays of two elements with spacing 4: element offsets 0, 1, 4, 5
  // times cos(pi/3) = 0.5.
  d.rf_chains = 2;
  d.subarray_spacing = 4.0;
  const Eigen::VectorXcd w = bs_steering(d, kPi / 3);
  const double offsets[] = {0.0, 1.0, 4.0, 5.0};
  for (int i = 0; i < 4; ++i) {
    const cd expected = std::polar(1.0, kPi * offsets[i] * 0.5);
    CHECK(std::abs(w(i) - expected) < 1e-14);
  }
  CHECK(unit_modulus(w));
}

TEST_CASE("RIS and UE steering vectors") {
  CHECK((ris_steering(3, 2, 0.7, 0.0) - Eigen::VectorXcd::Ones(6)).norm() < 1e-15);
  CHECK(ris_steering(1, 1, 0.3, 0.9).size() == 1);
  CHECK(std::abs(ris_steering(1, 1, 0.3, 0.9)(0) - cd(1.0, 0.0)) < 1e-15);

  const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
  const Eigen::VectorXcd r = ris_steering(2, 2, kPi / 4, kPi / 2);
  const double phases[] = {0.0, c, s, c + s};  // row index fastest
  for (int i = 0; i < 4; ++i) CHECK(std::abs(r(i) - std::polar(1.0, kPi * phases[i])) < 1e-14);

  CHECK((ue_steering(4, kPi / 2) - Eigen::VectorXcd::Ones(4)).norm() < 1e-14);
  const Eigen::VectorXcd u = ue_steering(3, 0.0);
  CHECK(std::abs(u(0) - cd(1, 0)) < 1e-15);
  CHECK(std::abs(u(1) - cd(-1, 0)) < 1e-15);
  CHECK(std::abs(u(2) - cd(1, 0)) < 1e-14);
  CHECK(unit_modulus(ris_steering(4, 4, 1.1, 0.4)));
  CHECK(unit_modulus(ue_steering(5, 2.2)));
}

TEST_CASE("single LoS path with broadside angles gives an all-ones link") {
  SystemDims d = desk();
  PathSet p;
  p.gains = {cd(1.0, 0.0)};
  p.departure_az = {kPi / 2};
  p.departure_el = {0.0};
  p.arrival_az = {0.0};
  p.arrival_el = {0.0};
  const Eigen::MatrixXcd h = bs_ris_channel(d, p);
  CHECK(h.rows() == d.ris_elements());
  CHECK(h.cols() == d.bs_antennas());
  CHECK((h - Eigen::MatrixXcd::Ones(h.rows(), h.cols())).norm() < 1e-13);
}

TEST_CASE("Khatri-Rao cascade matches the direct product") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 100 + trial);
    for (int k = 0; k < ch.dims.users; ++k) {
      const Eigen::VectorXcd theta = random_phases(ch.dims.ris_elements(), rng);
      const Eigen::MatrixXcd direct = ch.ris_ue[k] * theta.asDiagonal() * ch.bs_ris;
      const Eigen::VectorXcd lhs = vec(direct);
      const Eigen::VectorXcd rhs = ch.cascaded[k] * theta;
      CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
      const Eigen::MatrixXcd kr = khatri_rao(ch.bs_ris.transpose(), ch.ris_ue[k]);
      CHECK((kr - ch.cascaded[k]).norm() == 0.0);
    }
  }

  // Brute-force 2x2x2 instance: entry (r, c) of H_R diag(theta) H_T.
  const Eigen::MatrixXcd ht = gaussian(2, 2, rng);
  const Eigen::MatrixXcd hr = gaussian(2, 2, rng);
  const Eigen::VectorXcd theta = random_phases(2, rng);
  const Eigen::VectorXcd v = khatri_rao(ht.transpose(), hr) * theta;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 2; ++r) {
      cd sum = 0.0;
      for (int n = 0; n < 2; ++n) sum += hr(r, n) * theta(n) * ht(n, c);
      CHECK(std::abs(v(c * 2 + r) - sum) < 1e-13);
    }
  }
}

TEST_CASE("synthesis is deterministic and low rank") {
  const auto a = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 9);
  const auto b = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 9);
  CHECK(a.bs_ris == b.bs_ris);
  for (int k = 0; k < 3; ++k) CHECK(a.cascaded[k] == b.cascaded[k]);
  const auto c = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 10);
  CHECK(a.bs_ris != c.bs_ris);

  PathStatistics stats;
  stats.bs_ris_paths = 2;
  SystemDims big = desk();
  big.ris_rows = 6;
  big.ris_cols = 6;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto ch = synthesize_channels(big, desk_geometry(), stats, s);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ch.bs_ris);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0) ? 1 : 0;
    CHECK(rank <= stats.bs_ris_paths);
  }
}

TEST_CASE("geometry rejects coincident positions") {
  Geometry g = desk_geometry();
  g.users[1] = g.ris;
  CHECK_THROWS_AS(synthesize_channels(desk(), g, PathStatistics{}, 1), std::invalid_argument);
}

TEST_CASE("CSI error model") {
  const auto ch = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 3);
  const auto exact = apply_csi_error(ch, 0.0, 5);
  for (int k = 0; k < 3; ++k) {
    CHECK(exact.error_radius[k] == 0.0);
    CHECK(exact.estimated[k] == ch.cascaded[k]);
  }

  for (auto mode : {ErrorSampling::UniformBall, ErrorSampling::Boundary}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto e = apply_csi_error(ch, 0.2, s, mode);
      REQUIRE(e.has_error_matrices());
      for (int k = 0; k < 3; ++k) {
        const double hhat = e.estimated[k].norm();
        CHECK(e.error_radius[k] == doctest::Approx(0.2 * hhat).epsilon(1e-12));
        CHECK(e.error[k].norm() <= e.error_radius[k] * (1.0 + 1e-12));
        CHECK((e.cascaded[k] - e.error[k] - e.estimated[k]).norm() <= 1e-12 * hhat);
        if (mode == ErrorSampling::Boundary)
          CHECK(e.error[k].norm() == doctest::Approx(e.error_radius[k]).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(apply_csi_error(ch, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(apply_csi_error(ch, -0.1, 1), std::invalid_argument);
}

TEST_CASE("error matrix acts as vec(Lambda) = Delta theta") {
  std::mt19937_64 rng(4);
  const auto ch = apply_csi_error(
      synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 6), 0.1, 2);
  const Eigen::VectorXcd theta = random_phases(ch.dims.ris_elements(), rng);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXcd g_true = effective_channel(ch, theta, k, false);
    const Eigen::MatrixXcd g_hat = effective_channel(ch, theta, k, true);
    const Eigen::MatrixXcd lambda = devectorize(ch.error[k] * theta, ch.dims.ue_antennas);
    CHECK((g_true - g_hat - lambda).norm() <= 1e-12 * g_true.norm());
  }
}

TEST_CASE("Frobenius ball projection") {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(1, 1);
  x(0, 0) = 5.0;
  const Eigen::MatrixXcd p = project_frobenius_ball(x, 1.0);
  CHECK(std::abs(p(0, 0) - cd(1.0, 0.0)) < 1e-15);
  CHECK(project_frobenius_ball(x, 10.0) == x);
}

TEST_CASE("effective channel") {
  std::mt19937_64 rng(8);
  const auto ch = synthesize_channels(desk(), desk_geometry(), PathStatistics{}, 12);
  const Eigen::VectorXcd theta = random_phases(ch.dims.ris_elements(), rng);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXcd a = effective_channel(ch, theta, k, false);
    const Eigen::MatrixXcd b = effective_channel(ch, theta, k, true);
    CHECK((a - b).norm() <= 1e-13 * a.norm());
  }
  Eigen::VectorXcd bad = theta;
  bad(0) *= 1.1;
  CHECK_THROWS_AS(effective_channel(ch, bad, 0, false), std::invalid_argument);

  SystemDims one = desk();
  one.ris_rows = one.ris_cols = 1;
  one.users = 1;
  const auto single = assemble_channels(one, gaussian(1, one.bs_antennas(), rng),
                                        {gaussian(one.ue_antennas, 1, rng)});
  const Eigen::MatrixXcd g = effective_channel(single, Eigen::VectorXcd::Ones(1), 0, false);
  CHECK((g - single.ris_ue[0] * single.bs_ris).norm() < 1e-14);
}

TEST_CASE("devectorize is column-major") {
  Eigen::VectorXcd v(6);
  for (int i = 0; i < 6; ++i) v(i) = double(i);
  const Eigen::MatrixXcd m = devectorize(v, 2);
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == cd(1.0, 0.0));
  CHECK(m(0, 2) == cd(4.0, 0.0));
  CHECK_THROWS_AS(devectorize(v, 4), std::invalid_argument);
}

}
