#include "bace/losses.hpp"

#include <cmath>
#include <string>

namespace bace {

namespace {

constexpr double kNormEps = 1e-12;  // smoothing under the Euclidean norm
constexpr double kProbFloor = 1e-7;

void check_vec(const Vec& v, Index len, const char* what) {
  if (v.size() != len)
    throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(len));
}

using Cache = ForwardCache<double>;

// Discriminator probability with the clamp applied; d_dp is the derivative of
// the clamped value with respect to the raw output (0 inside the clamp).
struct ClampedProb {
  double p = 0.5;
  double d_dp = 1.0;
};

ClampedProb clamped_output(const Cache& cache) {
  const double raw = cache.output[0];
  ClampedProb out;
  out.p = clamp_probability(raw);
  out.d_dp = (raw < kProbFloor || raw > 1.0 - kProbFloor) ? 0.0 : 1.0;
  return out;
}

Vec concat2(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out.head(a.size()) = a;
  out.tail(b.size()) = b;
  return out;
}

Vec concat_t(double t, const Vec& rest) {
  Vec out(1 + rest.size());
  out[0] = t;
  out.tail(rest.size()) = rest;
  return out;
}

Vec concat_t2(double t, const Vec& a, const Vec& b) {
  Vec out(1 + a.size() + b.size());
  out[0] = t;
  out.segment(1, a.size()) = a;
  out.tail(b.size()) = b;
  return out;
}

void require_ce_nets(const BaceRulModel& model) {
  if (model.ablation == Ablation::NoConditionalSpace)
    throw ConfigError("condition-encoding losses are undefined without the conditional space");
}

double finalize(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + " is not finite");
  return value;
}

// D2 input triple; the latent slot is dropped when E2 (and with it the
// latent pathway of the discriminator) has been removed.
Vec d2_input(const BaceRulModel& model, double t, const Vec& z, const Vec& c) {
  return model.ablation == Ablation::NoEncoderE2 ? concat_t(t, c) : concat_t2(t, z, c);
}

}  // namespace

void CeBatch::validate(const BaceRulModel& model) const {
  if (xs.empty()) throw ConfigError("CE batch is empty");
  if (xs.size() != c_eps.size()) throw ShapeError("CE batch: xs and c_eps differ in length");
  for (const Vec& x : xs) check_vec(x, model.dims.m, "CE batch x");
  for (const Vec& c : c_eps) check_vec(c, model.dims.n, "CE batch c_eps");
}

void RpBatch::validate(const BaceRulModel& model) const {
  if (t_accel.empty()) throw ConfigError("RP batch has no accelerated-stage samples");
  if (t_all.empty()) throw ConfigError("RP batch has no full-pool samples");
  if (t_accel.size() != c_accel.size() || t_accel.size() != z_accel.size() ||
      t_normal.size() != c_normal.size() || t_normal.size() != z_normal.size() ||
      t_all.size() != c_all.size() || t_all.size() != z_all.size())
    throw ShapeError("RP batch: sub-batch lengths do not match");
  for (const Vec& c : c_accel) check_vec(c, model.dims.n, "RP batch c");
  for (const Vec& c : c_normal) check_vec(c, model.dims.n, "RP batch c");
  for (const Vec& c : c_all) check_vec(c, model.dims.n, "RP batch c");
  for (const Vec& z : z_accel) check_vec(z, model.dims.d_z, "RP batch z");
  for (const Vec& z : z_normal) check_vec(z, model.dims.d_z, "RP batch z");
  for (const Vec& z : z_all) check_vec(z, model.dims.d_z, "RP batch z");
}

namespace {

// Core of L_D1: -E[log D1(x, E1(x))] - E[log(1 - D1(G1(c_eps), c_eps))],
// gradients with respect to the discriminator only.
double d1_core(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
               MlpGradsD* grad_d1) {
  require_ce_nets(model);
  batch.validate(model);
  Cache c_e1, c_g1, c_d1;
  Vec grad_in;
  const double inv_b = 1.0 / static_cast<double>(batch.xs.size());
  double value = 0;

  for (std::size_t i = 0; i < batch.xs.size(); ++i) {
    forward(model.e1, batch.xs[i], mode, rng, c_e1);
    forward(model.d1, concat2(batch.xs[i], c_e1.output), mode, rng, c_d1);
    auto real = clamped_output(c_d1);
    value += -std::log(real.p) * inv_b;
    if (grad_d1) {
      Vec g(1);
      g[0] = -(1.0 / real.p) * real.d_dp * inv_b;
      backward(model.d1, c_d1, g, *grad_d1, grad_in);
    }

    forward(model.g1, batch.c_eps[i], mode, rng, c_g1);
    forward(model.d1, concat2(c_g1.output, batch.c_eps[i]), mode, rng, c_d1);
    auto fake = clamped_output(c_d1);
    value += -std::log(1.0 - fake.p) * inv_b;
    if (grad_d1) {
      Vec g(1);
      g[0] = (1.0 / (1.0 - fake.p)) * fake.d_dp * inv_b;
      backward(model.d1, c_d1, g, *grad_d1, grad_in);
    }
  }
  return finalize(value, "L_D1");
}

// Core of L_E1G1: roles flipped, discriminator frozen, gradients flow through
// it into the generator (fake term) and the encoder (real term).
double e1g1_core(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
                 MlpGradsD* grad_e1, MlpGradsD* grad_g1) {
  require_ce_nets(model);
  batch.validate(model);
  Cache c_e1, c_g1, c_d1;
  MlpGradsD scratch_d1;
  if (grad_e1 || grad_g1) scratch_d1 = MlpGradsD::zeros_like(model.d1);
  Vec grad_in, grad_net_in;
  const double inv_b = 1.0 / static_cast<double>(batch.xs.size());
  const Index m = model.dims.m;
  const Index n = model.dims.n;
  double value = 0;

  for (std::size_t i = 0; i < batch.xs.size(); ++i) {
    forward(model.g1, batch.c_eps[i], mode, rng, c_g1);
    forward(model.d1, concat2(c_g1.output, batch.c_eps[i]), mode, rng, c_d1);
    auto fake = clamped_output(c_d1);
    value += -std::log(fake.p) * inv_b;
    if (grad_g1) {
      Vec g(1);
      g[0] = -(1.0 / fake.p) * fake.d_dp * inv_b;
      backward(model.d1, c_d1, g, scratch_d1, grad_in);
      backward(model.g1, c_g1, Vec(grad_in.head(m)), *grad_g1, grad_net_in);
    }

    forward(model.e1, batch.xs[i], mode, rng, c_e1);
    forward(model.d1, concat2(batch.xs[i], c_e1.output), mode, rng, c_d1);
    auto real = clamped_output(c_d1);
    value += -std::log(1.0 - real.p) * inv_b;
    if (grad_e1) {
      Vec g(1);
      g[0] = (1.0 / (1.0 - real.p)) * real.d_dp * inv_b;
      backward(model.d1, c_d1, g, scratch_d1, grad_in);
      backward(model.e1, c_e1, Vec(grad_in.tail(n)), *grad_e1, grad_net_in);
    }
  }
  return finalize(value, "L_E1G1");
}

// Core of L_recon1: E[ ||G1(E1(x)) - x||_2 ], smoothed at zero error.
double recon1_core(const BaceRulModel& model, const std::vector<Vec>& xs, Mode mode, Rng* rng,
                   MlpGradsD* grad_e1, MlpGradsD* grad_g1) {
  require_ce_nets(model);
  if (xs.empty()) throw ConfigError("reconstruction batch is empty");
  Cache c_e1, c_g1;
  Vec grad_c, grad_net_in;
  const double inv_b = 1.0 / static_cast<double>(xs.size());
  double value = 0;

  for (const Vec& x : xs) {
    check_vec(x, model.dims.m, "recon1 x");
    forward(model.e1, x, mode, rng, c_e1);
    forward(model.g1, c_e1.output, mode, rng, c_g1);
    Vec delta = c_g1.output - x;
    const double r = std::sqrt(delta.squaredNorm() + kNormEps);
    value += r * inv_b;
    if (grad_e1 && grad_g1) {
      Vec g = delta * (inv_b / r);
      backward(model.g1, c_g1, g, *grad_g1, grad_c);
      backward(model.e1, c_e1, grad_c, *grad_e1, grad_net_in);
    }
  }
  return finalize(value, "L_recon1");
}

// Real triple (t_a, E2(t_a, c_a), c_a) scored by D2; the fake triple replaces
// the label with the generated value.
double d2_core(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
               MlpGradsD* grad_d2) {
  batch.validate(model);
  Cache c_e2, c_g2, c_d2;
  Vec grad_in;
  const bool no_e2 = model.ablation == Ablation::NoEncoderE2;
  const double inv_ba = 1.0 / static_cast<double>(batch.t_accel.size());
  const double inv_bc = 1.0 / static_cast<double>(batch.t_all.size());
  double value = 0;

  for (std::size_t i = 0; i < batch.t_accel.size(); ++i) {
    Vec in;
    if (no_e2) {
      in = concat_t(batch.t_accel[i], batch.c_accel[i]);
    } else {
      forward(model.e2, concat_t(batch.t_accel[i], batch.c_accel[i]), mode, rng, c_e2);
      in = concat_t2(batch.t_accel[i], c_e2.output, batch.c_accel[i]);
    }
    forward(model.d2, in, mode, rng, c_d2);
    auto real = clamped_output(c_d2);
    value += -std::log(real.p) * inv_ba;
    if (grad_d2) {
      Vec g(1);
      g[0] = -(1.0 / real.p) * real.d_dp * inv_ba;
      backward(model.d2, c_d2, g, *grad_d2, grad_in);
    }
  }

  for (std::size_t i = 0; i < batch.t_all.size(); ++i) {
    forward(model.g2, concat2(batch.z_all[i], batch.c_all[i]), mode, rng, c_g2);
    forward(model.d2, d2_input(model, c_g2.output[0], batch.z_all[i], batch.c_all[i]), mode, rng,
            c_d2);
    auto fake = clamped_output(c_d2);
    value += -std::log(1.0 - fake.p) * inv_bc;
    if (grad_d2) {
      Vec g(1);
      g[0] = (1.0 / (1.0 - fake.p)) * fake.d_dp * inv_bc;
      backward(model.d2, c_d2, g, *grad_d2, grad_in);
    }
  }
  return finalize(value, "L_D2");
}

double e2g2_core(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                 MlpGradsD* grad_g2, MlpGradsD* grad_e2) {
  batch.validate(model);
  const bool no_e2 = model.ablation == Ablation::NoEncoderE2;
  Cache c_e2, c_g2, c_d2;
  MlpGradsD scratch_d2;
  if (grad_g2 || grad_e2) scratch_d2 = MlpGradsD::zeros_like(model.d2);
  Vec grad_in, grad_net_in;
  const double inv_ba = 1.0 / static_cast<double>(batch.t_accel.size());
  const double inv_bc = 1.0 / static_cast<double>(batch.t_all.size());
  double value = 0;

  for (std::size_t i = 0; i < batch.t_all.size(); ++i) {
    forward(model.g2, concat2(batch.z_all[i], batch.c_all[i]), mode, rng, c_g2);
    forward(model.d2, d2_input(model, c_g2.output[0], batch.z_all[i], batch.c_all[i]), mode, rng,
            c_d2);
    auto fake = clamped_output(c_d2);
    value += -std::log(fake.p) * inv_bc;
    if (grad_g2) {
      Vec g(1);
      g[0] = -(1.0 / fake.p) * fake.d_dp * inv_bc;
      backward(model.d2, c_d2, g, scratch_d2, grad_in);
      Vec gt(1);
      gt[0] = grad_in[0];  // generated value sits in the first slot
      backward(model.g2, c_g2, gt, *grad_g2, grad_net_in);
    }
  }

  for (std::size_t i = 0; i < batch.t_accel.size(); ++i) {
    Vec in;
    if (no_e2) {
      in = concat_t(batch.t_accel[i], batch.c_accel[i]);
    } else {
      forward(model.e2, concat_t(batch.t_accel[i], batch.c_accel[i]), mode, rng, c_e2);
      in = concat_t2(batch.t_accel[i], c_e2.output, batch.c_accel[i]);
    }
    forward(model.d2, in, mode, rng, c_d2);
    auto real = clamped_output(c_d2);
    value += -std::log(1.0 - real.p) * inv_ba;
    if (!no_e2 && grad_e2) {
      Vec g(1);
      g[0] = (1.0 / (1.0 - real.p)) * real.d_dp * inv_ba;
      backward(model.d2, c_d2, g, scratch_d2, grad_in);
      backward(model.e2, c_e2, Vec(grad_in.segment(1, model.dims.d_z)), *grad_e2, grad_net_in);
    }
  }
  return finalize(value, "L_E2G2");
}

// Distortion loss: absolute error on accelerated-stage labels plus a squared
// hinge that penalizes predicting below normal-stage labels.
double dist_core(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                 MlpGradsD* grad_g2, bool accel_term, bool hinge_term) {
  batch.validate(model);
  Cache c_g2;
  Vec grad_in;
  double value = 0;

  if (accel_term) {
    const double inv_ba = 1.0 / static_cast<double>(batch.t_accel.size());
    for (std::size_t i = 0; i < batch.t_accel.size(); ++i) {
      forward(model.g2, concat2(batch.z_accel[i], batch.c_accel[i]), mode, rng, c_g2);
      const double delta = batch.t_accel[i] - c_g2.output[0];
      const double r = std::sqrt(delta * delta + kNormEps);
      value += r * inv_ba;
      if (grad_g2) {
        Vec g(1);
        g[0] = -(delta / r) * inv_ba;
        backward(model.g2, c_g2, g, *grad_g2, grad_in);
      }
    }
  }

  if (hinge_term && !batch.t_normal.empty()) {
    const double inv_bn = 1.0 / static_cast<double>(batch.t_normal.size());
    for (std::size_t i = 0; i < batch.t_normal.size(); ++i) {
      forward(model.g2, concat2(batch.z_normal[i], batch.c_normal[i]), mode, rng, c_g2);
      const double hinge = std::max(0.0, batch.t_normal[i] - c_g2.output[0]);
      value += hinge * hinge * inv_bn;
      if (grad_g2 && hinge > 0) {
        Vec g(1);
        g[0] = -2.0 * hinge * inv_bn;
        backward(model.g2, c_g2, g, *grad_g2, grad_in);
      }
    }
  }
  return finalize(value, "L_dist");
}

double recon2_core(const BaceRulModel& model, const std::vector<double>& ts,
                   const std::vector<Vec>& cs, Mode mode, Rng* rng, MlpGradsD* grad_g2,
                   MlpGradsD* grad_e2) {
  if (model.ablation == Ablation::NoEncoderE2)
    throw ConfigError("L_recon2 is undefined without the encoder");
  if (ts.empty()) throw ConfigError("reconstruction batch is empty");
  if (ts.size() != cs.size()) throw ShapeError("recon2: ts and cs differ in length");
  Cache c_e2, c_g2;
  Vec grad_in, grad_net_in;
  const double inv_b = 1.0 / static_cast<double>(ts.size());
  double value = 0;

  for (std::size_t i = 0; i < ts.size(); ++i) {
    check_vec(cs[i], model.dims.n, "recon2 c");
    forward(model.e2, concat_t(ts[i], cs[i]), mode, rng, c_e2);
    forward(model.g2, concat2(c_e2.output, cs[i]), mode, rng, c_g2);
    const double delta = c_g2.output[0] - ts[i];
    const double r = std::sqrt(delta * delta + kNormEps);
    value += r * inv_b;
    if (grad_g2 && grad_e2) {
      Vec g(1);
      g[0] = (delta / r) * inv_b;
      backward(model.g2, c_g2, g, *grad_g2, grad_in);
      backward(model.e2, c_e2, Vec(grad_in.head(model.dims.d_z)), *grad_e2, grad_net_in);
    }
  }
  return finalize(value, "L_recon2");
}

}  // namespace

double loss_d1(const BaceRulModel& model, const CeBatch& batch) {
  return d1_core(model, batch, Mode::Eval, nullptr, nullptr);
}

double loss_e1g1(const BaceRulModel& model, const CeBatch& batch) {
  return e1g1_core(model, batch, Mode::Eval, nullptr, nullptr, nullptr);
}

double loss_recon1(const BaceRulModel& model, const std::vector<Vec>& xs) {
  return recon1_core(model, xs, Mode::Eval, nullptr, nullptr, nullptr);
}

double loss_d2(const BaceRulModel& model, const RpBatch& batch) {
  return d2_core(model, batch, Mode::Eval, nullptr, nullptr);
}

double loss_e2g2(const BaceRulModel& model, const RpBatch& batch) {
  return e2g2_core(model, batch, Mode::Eval, nullptr, nullptr, nullptr);
}

double loss_dist(const BaceRulModel& model, const RpBatch& batch) {
  return dist_core(model, batch, Mode::Eval, nullptr, nullptr, true, true);
}

double loss_dist_hinge(const BaceRulModel& model, const RpBatch& batch) {
  return dist_core(model, batch, Mode::Eval, nullptr, nullptr, false, true);
}

double loss_recon2(const BaceRulModel& model, const std::vector<double>& ts,
                   const std::vector<Vec>& cs) {
  return recon2_core(model, ts, cs, Mode::Eval, nullptr, nullptr, nullptr);
}

double loss_recon2(const BaceRulModel& model, const RpBatch& batch) {
  return recon2_core(model, batch.t_all, batch.c_all, Mode::Eval, nullptr, nullptr, nullptr);
}

double composite_ce(const LossWeights& w, double ld1, double le1g1, double lrecon1) {
  return w.lambda11 * ld1 + w.lambda12 * le1g1 + lrecon1;
}

double composite_rp(const LossWeights& w, double ld2, double le2g2, double lrecon2, double ldist) {
  return w.lambda21 * ld2 + w.lambda22 * le2g2 + lrecon2 + ldist;
}

double loss_d1_grads(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
                     MlpGradsD& grad_d1) {
  return d1_core(model, batch, mode, rng, &grad_d1);
}

double loss_e1g1_grads(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_e1, MlpGradsD& grad_g1) {
  return e1g1_core(model, batch, mode, rng, &grad_e1, &grad_g1);
}

double loss_recon1_grads(const BaceRulModel& model, const std::vector<Vec>& xs, Mode mode,
                         Rng* rng, MlpGradsD& grad_e1, MlpGradsD& grad_g1) {
  return recon1_core(model, xs, mode, rng, &grad_e1, &grad_g1);
}

double loss_d2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                     MlpGradsD& grad_d2) {
  return d2_core(model, batch, mode, rng, &grad_d2);
}

double loss_e2g2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_g2, MlpGradsD* grad_e2) {
  return e2g2_core(model, batch, mode, rng, &grad_g2, grad_e2);
}

double loss_dist_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_g2) {
  return dist_core(model, batch, mode, rng, &grad_g2, true, true);
}

double loss_recon2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                         MlpGradsD& grad_g2, MlpGradsD& grad_e2) {
  return recon2_core(model, batch.t_all, batch.c_all, mode, rng, &grad_g2, &grad_e2);
}

}  // namespace bace
