#include "risee/objectives.hpp"
#include "risee/units.hpp"
#include "risee/verification.hpp"

#include <doctest.h>

#include <cmath>

using namespace risee;

namespace {

// Straight-line evaluation of the lower-bound rates and EE, written without
// the library's rate terms.
struct ScriptedEe {
  Eigen::VectorXd rates;
  double power = 0.0;
  double ee = 0.0;
};

ScriptedEe scripted(const DesignVariables& v, const ChannelRealization& ch, const PowerModel& pm) {
  const SystemDims& d = ch.dims;
  const int streams = d.total_streams();
  const int nt = d.antennas_per_subarray;
  Eigen::MatrixXcd x(d.bs_antennas(), streams);
  for (int j = 0; j < streams; ++j)
    for (int m = 0; m < d.rf_chains; ++m)
      for (int n = 0; n < nt; ++n) x(m * nt + n, j) = v.a(m * nt + n) * v.D(m, j);

  ScriptedEe out;
  out.rates.resize(streams);
  for (int k = 0; k < d.users; ++k) {
    const Eigen::VectorXcd h = ch.estimated[k] * v.theta;
    Eigen::MatrixXcd g(d.ue_antennas, d.bs_antennas());
    for (int c = 0; c < g.cols(); ++c)
      for (int r = 0; r < g.rows(); ++r) g(r, c) = h(c * d.ue_antennas + r);
    const double delta = ch.error_radius[k];
    const double varrho = std::pow(1.0 - delta / ch.estimated[k].norm(), 2);
    const double inflation = delta * std::sqrt(double(d.ris_elements()));
    for (int l = 0; l < d.streams_per_user; ++l) {
      const int s = k * d.streams_per_user + l;
      const Eigen::VectorXcd c = v.C.col(s);
      double signal = 0.0, interference = 0.0;
      for (int j = 0; j < streams; ++j) {
        const double mag = std::abs(c.dot(g * x.col(j)));
        if (j == s) {
          signal = varrho * mag * mag;
        } else {
          const double t = mag + inflation * v.D.col(j).norm();
          interference += t * t;
        }
      }
      out.rates(s) = std::log2(1.0 + signal / (interference + pm.noise));
    }
  }
  out.power = pm.bs_static + pm.amplifier * v.D.squaredNorm() +
              d.bs_antennas() * pm.bs_phase_shifter + d.ris_elements() * pm.ris_element;
  for (int k = 0; k < d.users; ++k) out.power += pm.ue_static[k] + pm.ue_receive[k];
  out.ee = pm.bandwidth * out.rates.sum() / out.power;
  return out;
}

SystemDims scalar_dims() {
  SystemDims d;
  d.rf_chains = d.antennas_per_subarray = d.ris_rows = d.ris_cols = 1;
  d.users = d.streams_per_user = d.ue_antennas = 1;
  return d;
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("total power against the table constants") {
  SystemDims d;
  d.rf_chains = 16;
  d.antennas_per_subarray = 2;  // 32 BS antennas
  d.ris_rows = d.ris_cols = 8;  // 64 elements
  d.users = 4;
  const PowerModel pm = PowerModel::defaults(4);

  DesignVariables v;
  v.D = Eigen::MatrixXcd::Zero(16, 4);
  v.D(0, 0) = std::sqrt(10.0);
  const double dbm1 = std::pow(10.0, (1.0 - 30.0) / 10.0);
  const double dbm5 = std::pow(10.0, (5.0 - 30.0) / 10.0);
  const double expected = std::pow(10.0, 0.9) + 1.2 * 10.0 + 32 * dbm1 + 64 * dbm1 + 4 * (dbm5 + dbm5);
  CHECK(total_power(v, d, pm) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(7.943 + 12 + 96 * 0.00126 + 8 * 0.00316).epsilon(1e-3));

  v.D.setZero();
  const double static_part = total_power(v, d, pm);
  CHECK(static_part == doctest::Approx(expected - 12.0).epsilon(1e-14));
  SystemDims doubled = d;
  doubled.ris_cols = 16;
  CHECK(total_power(v, doubled, pm) - static_part ==
        doctest::Approx(64 * pm.ris_element).epsilon(1e-12));
}

TEST_CASE("Jain index") {
  CHECK(jain_index(Eigen::Vector4d(2, 2, 2, 2)) == doctest::Approx(1.0));
  CHECK(jain_index(Eigen::Vector4d(0, 3, 0, 0)) == doctest::Approx(0.25));
  CHECK(jain_index(Eigen::Vector4d(1, 2, 3, 4)) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(jain_index(Eigen::Vector3d::Zero()) == 1.0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd r = Eigen::VectorXd::Random(5).cwiseAbs();
    const double j = jain_index(r);
    CHECK(j >= 0.2 - 1e-15);
    CHECK(j <= 1.0 + 1e-15);
  }
}

TEST_CASE("fairness violation and penalty arithmetic") {
  CHECK(fairness_violation(Eigen::Vector4d(1, 2, 3, 4), 0.75) == doctest::Approx(-10.0));
  CHECK(fairness_violation(Eigen::Vector3d(2, 2, 2), 1.0) == doctest::Approx(0.0));
  CHECK(fairness_violation(Eigen::Vector3d(2, 2, 2), 0.75) < 0.0);
}

TEST_CASE("single-link rate") {
  const SystemDims d = scalar_dims();
  Eigen::MatrixXcd ht(1, 1), hr(1, 1);
  ht(0, 0) = cd(0.6, -0.2);
  hr(0, 0) = cd(-1.1, 0.4);
  const auto ch = assemble_channels(d, ht, {hr});
  PowerModel pm = PowerModel::defaults(1);
  pm.noise = 0.3;

  DesignVariables v;
  v.D = Eigen::MatrixXcd::Constant(1, 1, cd(0.8, 0.5));
  v.a = Eigen::VectorXcd::Constant(1, std::polar(1.0, 0.4));
  v.theta = Eigen::VectorXcd::Constant(1, std::polar(1.0, -1.3));
  v.C = Eigen::MatrixXcd::Constant(1, 1, cd(1.0, 0.0));
  const double g = std::abs(hr(0, 0) * v.theta(0) * ht(0, 0) * v.a(0) * v.D(0, 0));
  const double expected = std::log2(1.0 + g * g / 0.3);
  CHECK(true_rate(v, ch, pm, 0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(robust_rate_lb(v, ch, pm, 0, 0) == doctest::Approx(expected).epsilon(1e-12));

  const Eigen::VectorXcd scaled = Eigen::VectorXcd::Constant(1, cd(7.0, 0.0));
  CHECK(true_rate(v, ch, pm, 0, 0, scaled) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(true_rate(v, ch, pm, 0, 0, Eigen::VectorXcd::Zero(1)), std::invalid_argument);

  v.D.setZero();
  CHECK(true_rate(v, ch, pm, 0, 0) == 0.0);
  CHECK(ee_lb(v, ch, pm) == 0.0);
}

TEST_CASE("combiner scale invariance on a multiuser instance") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.0, 17);
  for (int k = 0; k < 2; ++k) {
    const double base = true_rate(inst.vars, inst.channel, inst.power, k, 0);
    const Eigen::VectorXcd c = inst.vars.C.col(k) * cd(0.0, 7.0);
    CHECK(true_rate(inst.vars, inst.channel, inst.power, k, 0, c) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("lower bound is tight without error") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = random_oracle_instance(small_oracle_dims(), 0.0, s);
    const Eigen::VectorXd lb = robust_rates(inst.vars, inst.channel, inst.power);
    const Eigen::VectorXd tr = true_rates(inst.vars, inst.channel, inst.power);
    CHECK((lb - tr).norm() <= 1e-12 * tr.norm());
  }
}

TEST_CASE("lower bound terms") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.2, 3);
  const RateTerms t = evaluate_rate_terms(inst.vars, inst.channel, inst.power.noise);
  for (int k = 0; k < 2; ++k) CHECK(t.varrho(k) == doctest::Approx(0.64).epsilon(1e-12));

  ChannelRealization bad = inst.channel;
  bad.error_radius[0] = 1.01 * bad.estimated[0].norm();
  CHECK_THROWS_AS(evaluate_rate_terms(inst.vars, bad, 1.0), std::invalid_argument);
}

TEST_CASE("lower bound is nonincreasing in the error radius") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.0, 21);
  ChannelRealization ch = inst.channel;
  const double hn = ch.estimated[0].norm();
  double previous = robust_rate_lb(inst.vars, ch, inst.power, 0, 0);
  for (double frac = 0.05; frac < 0.99; frac += 0.05) {
    ch.error_radius[0] = frac * hn;
    const double r = robust_rate_lb(inst.vars, ch, inst.power, 0, 0);
    CHECK(r <= previous + 1e-15);
    previous = r;
  }
}

TEST_CASE("EE and rates against a scripted evaluation") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = random_oracle_instance(small_oracle_dims(), 0.1, 40 + s);
    const ScriptedEe ref = scripted(inst.vars, inst.channel, inst.power);
    const Eigen::VectorXd lb = robust_rates(inst.vars, inst.channel, inst.power);
    CHECK((lb - ref.rates).norm() <= 1e-12 * ref.rates.norm());
    CHECK(sum_rate_lb(inst.vars, inst.channel, inst.power) ==
          doctest::Approx(ref.rates.sum()).epsilon(1e-12));
    CHECK(total_power(inst.vars, inst.channel.dims, inst.power) ==
          doctest::Approx(ref.power).epsilon(1e-14));
    CHECK(ee_lb(inst.vars, inst.channel, inst.power) == doctest::Approx(ref.ee).epsilon(1e-12));

    PowerModel half = inst.power;
    half.bandwidth *= 0.5;
    CHECK(ee_lb(inst.vars, inst.channel, half) ==
          doctest::Approx(0.5 * ref.ee).epsilon(1e-12));
  }
}

TEST_CASE("augmented Lagrangian") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.1, 77);
  const double ee = ee_lb(inst.vars, inst.channel, inst.power);
  const double g = penalty_G(inst.vars, inst.channel, inst.power, inst.fairness);

  const Eigen::VectorXd r = weighted_user_rates(
      robust_rates(inst.vars, inst.channel, inst.power), inst.fairness, 1);
  const double rsum = r.sum();
  const double expected_g = inst.fairness.rho * 2 * r.squaredNorm() - rsum * rsum + inst.vars.mu;
  CHECK(g == doctest::Approx(expected_g).epsilon(1e-12));

  const double h = augmented_lagrangian(inst.vars, inst.channel, inst.power, inst.fairness, 0.1, 10.0);
  CHECK(h == doctest::Approx(ee - 0.1 * g - g * g / 20.0).epsilon(1e-12));

  const double far = augmented_lagrangian(inst.vars, inst.channel, inst.power, inst.fairness, 0.0, 1e15);
  CHECK(far == doctest::Approx(ee).epsilon(1e-12));

  // Choose mu so that G is exactly zero: H then equals the EE bound.
  DesignVariables v = inst.vars;
  v.mu = -fairness_violation(r, inst.fairness.rho);
  if (v.mu >= 0.0) {
    const double h0 = augmented_lagrangian(v, inst.channel, inst.power, inst.fairness, 0.7, 3.0);
    CHECK(h0 == doctest::Approx(ee).epsilon(1e-12));
  }
  CHECK_THROWS_AS(augmented_lagrangian(v, inst.channel, inst.power, inst.fairness, 0.0, 0.0),
                  std::invalid_argument);

  const ObjectiveSnapshot snap =
      evaluate_objectives(inst.vars, inst.channel, inst.power, inst.fairness, 0.1, 10.0);
  CHECK(snap.lagrangian == doctest::Approx(h).epsilon(1e-14));
  CHECK(snap.ee == doctest::Approx(ee).epsilon(1e-14));
}

TEST_CASE("hybrid precoder layout") {
  Eigen::VectorXcd a(4), d(2);
  a << 1.0, cd(0, 1), -1.0, cd(0, -1);
  d << 2.0, 3.0;
  const Eigen::VectorXcd x = hybrid_precoder(a, d, 2);
  CHECK(x(0) == cd(2, 0));
  CHECK(x(1) == cd(0, 2));
  CHECK(x(2) == cd(-3, 0));
  CHECK(x(3) == cd(0, -3));
}

}
