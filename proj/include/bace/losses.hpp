#pragma once

#include <vector>

#include "bace/model.hpp"
#include "bace/nn.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

// Mini-batch for the condition-encoding losses: real measurements paired with
// noise conditions drawn from p_eps.
struct CeBatch {
  std::vector<Vec> xs;     // normalized measurements, length m each
  std::vector<Vec> c_eps;  // noise conditions, length n each

  void validate(const BaceRulModel& model) const;
};

// Mini-batch for the RUL-prediction losses. Three independently drawn
// sub-batches: accelerated-stage pairs (real triples, distortion term 1),
// normal-stage pairs (distortion term 2; may be empty when the data has no
// normal stage), and a full-pool sub-batch for generated triples. Each
// sub-batch carries its own latent noise. Labels are in scaled units.
struct RpBatch {
  std::vector<double> t_accel;
  std::vector<Vec> c_accel;
  std::vector<Vec> z_accel;

  std::vector<double> t_normal;
  std::vector<Vec> c_normal;
  std::vector<Vec> z_normal;

  std::vector<double> t_all;
  std::vector<Vec> c_all;
  std::vector<Vec> z_all;

  void validate(const BaceRulModel& model) const;
};

struct LossWeights {
  double lambda11 = 1.0;
  double lambda12 = 1.0;
  double lambda21 = 1.0;
  double lambda22 = 1.0;
};

using MlpGradsD = MlpGrads<double>;

// Scalar (eval-mode) loss values. Each is the arithmetic mean over the batch
// of the corresponding per-sample term; all are deterministic.
double loss_d1(const BaceRulModel& model, const CeBatch& batch);
double loss_e1g1(const BaceRulModel& model, const CeBatch& batch);
double loss_recon1(const BaceRulModel& model, const std::vector<Vec>& xs);
double loss_d2(const BaceRulModel& model, const RpBatch& batch);
double loss_e2g2(const BaceRulModel& model, const RpBatch& batch);
double loss_dist(const BaceRulModel& model, const RpBatch& batch);
double loss_recon2(const BaceRulModel& model, const std::vector<double>& ts,
                   const std::vector<Vec>& cs);
double loss_recon2(const BaceRulModel& model, const RpBatch& batch);

// Normal-stage hinge component of the distortion loss (its second term),
// reported separately for convergence tracking.
double loss_dist_hinge(const BaceRulModel& model, const RpBatch& batch);

// Composite reporting objectives. Optimization applies each term only to its
// own parameter group; these are the weighted scalar summaries.
double composite_ce(const LossWeights& w, double ld1, double le1g1, double lrecon1);
double composite_rp(const LossWeights& w, double ld2, double le2g2, double lrecon2, double ldist);

// Gradient-bearing variants. Each returns the loss value and accumulates
// gradients for the loss's designated parameter group(s) only; every other
// group is frozen. In Train mode, forwards use dropout from `rng`; in Eval
// mode the value matches the scalar functions above exactly.
double loss_d1_grads(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
                     MlpGradsD& grad_d1);
double loss_e1g1_grads(const BaceRulModel& model, const CeBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_e1, MlpGradsD& grad_g1);
double loss_recon1_grads(const BaceRulModel& model, const std::vector<Vec>& xs, Mode mode,
                         Rng* rng, MlpGradsD& grad_e1, MlpGradsD& grad_g1);
double loss_d2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                     MlpGradsD& grad_d2);
double loss_e2g2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_g2, MlpGradsD* grad_e2);
double loss_dist_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                       MlpGradsD& grad_g2);
double loss_recon2_grads(const BaceRulModel& model, const RpBatch& batch, Mode mode, Rng* rng,
                         MlpGradsD& grad_g2, MlpGradsD& grad_e2);

}  // namespace bace
