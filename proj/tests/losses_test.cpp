#include <doctest.h>

#include <cmath>

#include "bace/losses.hpp"
#include "test_support.hpp"

using namespace bace;
using test::random_ce_batch;
using test::random_rp_batch;
using test::tiny_model;
using test::zero_model;

namespace {

const double kTwoLog2 = 2.0 * std::log(2.0);

}  // namespace

TEST_CASE("adversarial losses equal 2 ln 2 when the discriminators output 0.5") {
  auto model = zero_model();
  auto ce = random_ce_batch(model, 6, 1);
  auto rp = random_rp_batch(model, 6, 2);
  CHECK(loss_d1(model, ce) == doctest::Approx(kTwoLog2).epsilon(1e-12));
  CHECK(loss_e1g1(model, ce) == doctest::Approx(kTwoLog2).epsilon(1e-12));
  CHECK(loss_d1(model, ce) + loss_e1g1(model, ce) == doctest::Approx(2 * kTwoLog2));
  CHECK(loss_d2(model, rp) == doctest::Approx(kTwoLog2).epsilon(1e-12));
  CHECK(loss_e2g2(model, rp) == doctest::Approx(kTwoLog2).epsilon(1e-12));
}

TEST_CASE("a perfect discriminator drives L_D1 to the clamp floor") {
  auto model = zero_model();
  // Zero-weight E1/G1 give real pairs (x, 0) and fake pairs (0, c_eps); a
  // hand-set D1 row separates them with a huge margin.
  model.d1.weights[0] << 100, 100, 100, -100, -100, -100, -100, -100;
  CeBatch batch;
  for (int i = 0; i < 4; ++i) {
    batch.xs.push_back(Vec::Constant(3, 1.0));
    batch.c_eps.push_back(Vec::Constant(5, 1.0));
  }
  const double loss = loss_d1(model, batch);
  CHECK(loss > 1.9e-7);
  CHECK(loss < 2.1e-7);
}

TEST_CASE("loss_recon1: identity reconstruction and constant offset") {
  auto model = zero_model();
  // E1 embeds x into the first three coordinates of c; G1 projects them back.
  model.e1.weights[0].topRows(3) = Mat::Identity(3, 3);
  model.g1.weights[0].leftCols(3) = Mat::Identity(3, 3);
  Rng rng(8);
  std::vector<Vec> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(rng.uniform_vec(3, -2.0, 2.0));
  CHECK(loss_recon1(model, xs) < 1e-5);

  auto offset_model = zero_model();  // reconstruction is G1's bias, x is zero
  offset_model.g1.biases[0] << 3.0, 0.0, 0.0;
  std::vector<Vec> zeros(4, Vec::Zero(3));
  CHECK(loss_recon1(offset_model, zeros) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("loss_d2 requires a non-empty accelerated partition") {
  auto model = zero_model();
  auto rp = random_rp_batch(model, 4, 3);
  rp.t_accel.clear();
  rp.c_accel.clear();
  rp.z_accel.clear();
  CHECK_THROWS_AS(loss_d2(model, rp), ConfigError);
}

TEST_CASE("loss_dist: vanishing cases and the hinge definition") {
  auto model = zero_model();
  model.g2.biases[0][0] = 0.7;
  RpBatch batch;
  batch.t_accel = {0.7, 0.7};
  batch.c_accel = {Vec::Zero(5), Vec::Zero(5)};
  batch.z_accel = {Vec::Zero(2), Vec::Zero(2)};
  batch.t_normal = {0.5};
  batch.c_normal = {Vec::Zero(5)};
  batch.z_normal = {Vec::Zero(2)};
  batch.t_all = batch.t_accel;
  batch.c_all = batch.c_accel;
  batch.z_all = batch.z_accel;
  CHECK(loss_dist(model, batch) < 1e-5);  // exact labels, prediction above t_n

  model.g2.biases[0][0] = 0.96;
  batch.t_normal = {1.0};
  CHECK(loss_dist_hinge(model, batch) == doctest::Approx(0.0016).epsilon(1e-9));
  model.g2.biases[0][0] = 1.2;
  CHECK(loss_dist_hinge(model, batch) == doctest::Approx(0.0));
}

TEST_CASE("loss_dist hinge term is non-increasing in the prediction") {
  auto model = zero_model();
  RpBatch batch;
  batch.t_accel = {0.5};
  batch.c_accel = {Vec::Zero(5)};
  batch.z_accel = {Vec::Zero(2)};
  batch.t_normal = {1.0};
  batch.c_normal = {Vec::Zero(5)};
  batch.z_normal = {Vec::Zero(2)};
  batch.t_all = batch.t_accel;
  batch.c_all = batch.c_accel;
  batch.z_all = batch.z_accel;
  double prev = std::numeric_limits<double>::infinity();
  for (double bias = -0.5; bias <= 1.5; bias += 0.1) {
    model.g2.biases[0][0] = bias;
    const double hinge = loss_dist_hinge(model, batch);
    CHECK(hinge <= prev);
    prev = hinge;
  }
}

TEST_CASE("loss_recon2: exact reconstruction and constant offset") {
  auto model = zero_model();
  model.g2.biases[0][0] = 0.6;
  std::vector<double> ts(5, 0.6);
  std::vector<Vec> cs(5, Vec::Zero(5));
  CHECK(loss_recon2(model, ts, cs) < 1e-5);
  std::vector<double> shifted(5, 0.35);  // generator stays at 0.6
  CHECK(loss_recon2(model, shifted, cs) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("composite objectives are plain weighted sums") {
  LossWeights w;
  CHECK(composite_ce(w, 1.0, 2.0, 3.0) == doctest::Approx(6.0));
  CHECK(composite_rp(w, 1.0, 2.0, 3.0, 4.0) == doctest::Approx(10.0));
  w.lambda11 = 0.0;
  CHECK(composite_ce(w, 123.0, 2.0, 3.0) == doctest::Approx(5.0));

  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    LossWeights rw{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0),
                   rng.uniform(0.0, 2.0)};
    const double a = rng.uniform(0.0, 3.0), b = rng.uniform(0.0, 3.0), c = rng.uniform(0.0, 3.0),
                 d = rng.uniform(0.0, 3.0);
    CHECK(std::abs(composite_ce(rw, a, b, c) - (rw.lambda11 * a + rw.lambda12 * b + c)) < 1e-12);
    CHECK(std::abs(composite_rp(rw, a, b, c, d) -
                   (rw.lambda21 * a + rw.lambda22 * b + c + d)) < 1e-12);
  }
}

TEST_CASE("losses stay finite under extreme discriminator outputs") {
  auto model = zero_model();
  model.d1.weights[0].setConstant(1e4);
  model.d2.weights[0].setConstant(-1e4);
  auto ce = random_ce_batch(model, 4, 5);
  auto rp = random_rp_batch(model, 4, 6);
  CHECK(std::isfinite(loss_d1(model, ce)));
  CHECK(std::isfinite(loss_e1g1(model, ce)));
  CHECK(std::isfinite(loss_d2(model, rp)));
  CHECK(std::isfinite(loss_e2g2(model, rp)));
}

TEST_CASE("empty batches are rejected") {
  auto model = zero_model();
  CHECK_THROWS_AS(loss_d1(model, CeBatch{}), ConfigError);
  CHECK_THROWS_AS(loss_recon1(model, {}), ConfigError);
  CHECK_THROWS_AS(loss_d2(model, RpBatch{}), ConfigError);
}

namespace {

// Finite-difference verification of one loss against one parameter group.
template <class LossValue>
double check_group(const BaceRulModel& model, MlpParams<double> BaceRulModel::* net,
                   const MlpGradsD& analytic, LossValue&& value_of) {
  auto fn = [&](const MlpParams<double>& p) {
    BaceRulModel probe = model;
    probe.*net = p;
    return value_of(probe);
  };
  return grad_check<double>(fn, model.*net, analytic, 1e-5);
}

}  // namespace

TEST_CASE("gradients of all seven losses match finite differences") {
  auto model = tiny_model(101);
  auto ce = random_ce_batch(model, 4, 55);
  auto rp = random_rp_batch(model, 4, 56);
  // normal-stage labels straddling the generator output exercise both hinge branches
  for (std::size_t i = 0; i < rp.t_normal.size(); ++i)
    rp.t_normal[i] = -0.8 + 1.6 * static_cast<double>(i) / (rp.t_normal.size() - 1);

  SUBCASE("L_D1 w.r.t. discriminator") {
    auto g = MlpGradsD::zeros_like(model.d1);
    const double v = loss_d1_grads(model, ce, Mode::Eval, nullptr, g);
    CHECK(v == loss_d1(model, ce));
    CHECK(check_group(model, &BaceRulModel::d1, g,
                      [&](const BaceRulModel& m) { return loss_d1(m, ce); }) < 1e-4);
  }
  SUBCASE("L_E1G1 w.r.t. encoder and generator") {
    auto ge = MlpGradsD::zeros_like(model.e1);
    auto gg = MlpGradsD::zeros_like(model.g1);
    const double v = loss_e1g1_grads(model, ce, Mode::Eval, nullptr, ge, gg);
    CHECK(v == loss_e1g1(model, ce));
    CHECK(check_group(model, &BaceRulModel::e1, ge,
                      [&](const BaceRulModel& m) { return loss_e1g1(m, ce); }) < 1e-4);
    CHECK(check_group(model, &BaceRulModel::g1, gg,
                      [&](const BaceRulModel& m) { return loss_e1g1(m, ce); }) < 1e-4);
  }
  SUBCASE("L_recon1 w.r.t. encoder and generator") {
    auto ge = MlpGradsD::zeros_like(model.e1);
    auto gg = MlpGradsD::zeros_like(model.g1);
    const double v = loss_recon1_grads(model, ce.xs, Mode::Eval, nullptr, ge, gg);
    CHECK(v == loss_recon1(model, ce.xs));
    CHECK(check_group(model, &BaceRulModel::e1, ge,
                      [&](const BaceRulModel& m) { return loss_recon1(m, ce.xs); }) < 1e-4);
    CHECK(check_group(model, &BaceRulModel::g1, gg,
                      [&](const BaceRulModel& m) { return loss_recon1(m, ce.xs); }) < 1e-4);
  }
  SUBCASE("L_D2 w.r.t. discriminator") {
    auto g = MlpGradsD::zeros_like(model.d2);
    const double v = loss_d2_grads(model, rp, Mode::Eval, nullptr, g);
    CHECK(v == loss_d2(model, rp));
    CHECK(check_group(model, &BaceRulModel::d2, g,
                      [&](const BaceRulModel& m) { return loss_d2(m, rp); }) < 1e-4);
  }
  SUBCASE("L_E2G2 w.r.t. generator and encoder") {
    auto gg = MlpGradsD::zeros_like(model.g2);
    auto ge = MlpGradsD::zeros_like(model.e2);
    const double v = loss_e2g2_grads(model, rp, Mode::Eval, nullptr, gg, &ge);
    CHECK(v == loss_e2g2(model, rp));
    CHECK(check_group(model, &BaceRulModel::g2, gg,
                      [&](const BaceRulModel& m) { return loss_e2g2(m, rp); }) < 1e-4);
    CHECK(check_group(model, &BaceRulModel::e2, ge,
                      [&](const BaceRulModel& m) { return loss_e2g2(m, rp); }) < 1e-4);
  }
  SUBCASE("L_dist w.r.t. generator, both hinge branches") {
    auto gg = MlpGradsD::zeros_like(model.g2);
    const double v = loss_dist_grads(model, rp, Mode::Eval, nullptr, gg);
    CHECK(v == loss_dist(model, rp));
    CHECK(check_group(model, &BaceRulModel::g2, gg,
                      [&](const BaceRulModel& m) { return loss_dist(m, rp); }) < 1e-4);
  }
  SUBCASE("L_recon2 w.r.t. generator and encoder") {
    auto gg = MlpGradsD::zeros_like(model.g2);
    auto ge = MlpGradsD::zeros_like(model.e2);
    const double v = loss_recon2_grads(model, rp, Mode::Eval, nullptr, gg, ge);
    CHECK(v == loss_recon2(model, rp));
    CHECK(check_group(model, &BaceRulModel::g2, gg,
                      [&](const BaceRulModel& m) { return loss_recon2(m, rp); }) < 1e-4);
    CHECK(check_group(model, &BaceRulModel::e2, ge,
                      [&](const BaceRulModel& m) { return loss_recon2(m, rp); }) < 1e-4);
  }
}

TEST_CASE("ablated losses: D2 scores (t, c) pairs without the encoder") {
  auto model = tiny_model(77, 0.0, Ablation::NoEncoderE2);
  REQUIRE(model.e2.empty());
  REQUIRE(model.d2.input_dim() == 1 + model.dims.n);
  auto rp = random_rp_batch(model, 4, 57);
  CHECK(std::isfinite(loss_d2(model, rp)));
  CHECK(std::isfinite(loss_e2g2(model, rp)));
  CHECK_THROWS_AS(loss_recon2(model, rp), ConfigError);

  auto gd = MlpGradsD::zeros_like(model.d2);
  loss_d2_grads(model, rp, Mode::Eval, nullptr, gd);
  CHECK(check_group(model, &BaceRulModel::d2, gd,
                    [&](const BaceRulModel& m) { return loss_d2(m, rp); }) < 1e-4);
  auto gg = MlpGradsD::zeros_like(model.g2);
  loss_e2g2_grads(model, rp, Mode::Eval, nullptr, gg, nullptr);
  CHECK(check_group(model, &BaceRulModel::g2, gg,
                    [&](const BaceRulModel& m) { return loss_e2g2(m, rp); }) < 1e-4);
}
