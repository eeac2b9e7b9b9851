#include "risee/gradients.hpp"
#include "risee/verification.hpp"

#include <doctest.h>

#include <cmath>

using namespace risee;

namespace {

constexpr Block kBlocks[] = {Block::Digital, Block::Analog, Block::Reflection, Block::Combiner};

const char* block_name(Block b) {
  switch (b) {
    case Block::Digital: return "D";
    case Block::Analog: return "a";
    case Block::Reflection: return "theta";
    case Block::Combiner: return "C";
  }
  return "?";
}

SystemDims single_user_dims() {
  SystemDims d;
  d.rf_chains = 1;
  d.antennas_per_subarray = 2;
  d.ris_rows = 2;
  d.ris_cols = 2;
  d.users = 1;
  d.ue_antennas = 2;
  return d;
}

}  // namespace

TEST_SUITE("gradients") {

TEST_CASE("stream-rate gradients match finite differences") {
  for (Block b : kBlocks) {
    for (int user = 0; user < 2; ++user) {
      GradientCheckOptions opt;
      opt.target = GradientTarget::StreamRate;
      opt.block = b;
      opt.user = user;
      opt.seed = 5;
      const OracleReport r = fd_gradient_check_random(small_oracle_dims(), 0.1, 300 + user, opt);
      INFO(block_name(b), " ", r.summary());
      CHECK(r.pass);
    }
  }
}

TEST_CASE("penalty and Lagrangian gradients match finite differences") {
  for (auto target : {GradientTarget::Penalty, GradientTarget::Lagrangian}) {
    for (Block b : kBlocks) {
      GradientCheckOptions opt;
      opt.target = target;
      opt.block = b;
      const OracleReport r = fd_gradient_check_random(small_oracle_dims(), 0.2, 11, opt);
      INFO(block_name(b), " ", r.summary());
      CHECK(r.pass);
    }
  }
}

TEST_CASE("collapse of the D gradient without error or interference") {
  const SystemDims d = single_user_dims();
  const auto inst = random_oracle_instance(d, 0.0, 9);
  const auto& v = inst.vars;
  const Eigen::MatrixXcd g = effective_channel(inst.channel, v.theta, 0, true);
  // M = 1: the analog matrix is the single column a.
  const cd b = (v.a.adjoint() * g.adjoint() * v.C.col(0))(0);
  const cd bd = std::conj(b) * v.D(0, 0);
  const double expected_scale = 2.0 / std::log(2.0) / (std::norm(bd) + inst.power.noise);
  const cd expected = expected_scale * b * bd;
  const BlockGradient grad = grad_rate_wrt_D(v, inst.channel, inst.power, 0, 0);
  CHECK(grad.guard_hits == 0);
  CHECK(std::abs(grad.value(0, 0) - expected) <= 1e-12 * std::abs(expected));
}

TEST_CASE("combiner gradient has no cross-column terms") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.1, 4);
  for (int k = 0; k < 2; ++k) {
    const BlockGradient g = grad_rate_wrt_C(inst.vars, inst.channel, inst.power, k, 0);
    for (int col = 0; col < 2; ++col) {
      if (col == k) {
        CHECK(g.value.col(col).norm() > 0.0);
      } else {
        CHECK(g.value.col(col).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("single-user penalty gradient vanishes") {
  const auto inst = random_oracle_instance(single_user_dims(), 0.1, 6);
  FairnessSpec f = inst.fairness;
  f.rho = 1.0;
  f.weights = {1.0};
  for (Block b : kBlocks) {
    const BlockGradient g = grad_penalty(inst.vars, inst.channel, inst.power, f, b);
    CHECK(g.value.norm() == 0.0);
  }
}

TEST_CASE("Lagrangian gradient reduces to the EE gradient") {
  auto inst = random_oracle_instance(single_user_dims(), 0.1, 13);
  FairnessSpec f = inst.fairness;
  f.rho = 1.0;
  f.weights = {1.0};
  inst.vars.mu = 0.0;  // G = 0 for K = 1

  const double power = total_power(inst.vars, inst.channel.dims, inst.power);
  const BlockGradient rate_a = grad_rate_wrt_a(inst.vars, inst.channel, inst.power, 0, 0);
  const BlockGradient h_a = grad_lagrangian(inst.vars, inst.channel, inst.power, f, 0.0, 10.0,
                                            Block::Analog);
  const double scale = inst.power.bandwidth / power;
  CHECK((h_a.value - scale * rate_a.value).norm() <= 1e-12 * h_a.value.norm());

  // With xi = 0 the digital block loses its quotient term.
  PowerModel flat = inst.power;
  flat.amplifier = 0.0;
  const double p0 = total_power(inst.vars, inst.channel.dims, flat);
  const BlockGradient rate_d = grad_rate_wrt_D(inst.vars, inst.channel, flat, 0, 0);
  const BlockGradient h_d = grad_lagrangian(inst.vars, inst.channel, flat, f, 0.0, 10.0,
                                            Block::Digital);
  CHECK((h_d.value - flat.bandwidth / p0 * rate_d.value).norm() <= 1e-12 * h_d.value.norm());
}

TEST_CASE("snapshot overload agrees with the direct evaluation") {
  const auto inst = random_oracle_instance(small_oracle_dims(), 0.1, 21);
  const ObjectiveSnapshot snap =
      evaluate_objectives(inst.vars, inst.channel, inst.power, inst.fairness, 0.4, 2.5);
  for (Block b : kBlocks) {
    const BlockGradient direct =
        grad_lagrangian(inst.vars, inst.channel, inst.power, inst.fairness, 0.4, 2.5, b);
    const BlockGradient cached =
        grad_lagrangian(snap, inst.vars, inst.channel, inst.power, inst.fairness, 0.4, 2.5, b);
    CHECK((direct.value - cached.value).norm() <= 1e-14 * (1.0 + direct.value.norm()));
  }
  const GradientBundle all =
      lagrangian_gradients(inst.vars, inst.channel, inst.power, inst.fairness, 0.4, 2.5);
  CHECK(all.gD.rows() == inst.vars.D.rows());
  CHECK(all.ga.size() == inst.vars.a.size());
  CHECK(all.gtheta.size() == inst.vars.theta.size());
  CHECK(all.gC.cols() == inst.vars.C.cols());
  CHECK(all.gD.allFinite());
  CHECK(all.gtheta.allFinite());
}

TEST_CASE("guard floor keeps gradients finite at a zero precoder column") {
  auto inst = random_oracle_instance(small_oracle_dims(), 0.1, 2);
  inst.vars.D.col(1).setZero();
  for (Block b : kBlocks) {
    const BlockGradient g =
        grad_lagrangian(inst.vars, inst.channel, inst.power, inst.fairness, 0.2, 3.0, b);
    CHECK(g.value.allFinite());
  }
  const BlockGradient gd = grad_rate_wrt_D(inst.vars, inst.channel, inst.power, 0, 0);
  CHECK(gd.guard_hits > 0);
}

}
