#pragma once

#include <vector>

#include "bace/data.hpp"
#include "bace/nn.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

enum class Ablation { None, NoConditionalSpace, NoEncoderE2 };

struct Dimensions {
  Index m = 0;      // sensor-feature count
  Index n = 0;      // conditional-space dimension, n > m
  Index d_z = 10;   // latent-space dimension
  int rul_cap = 125;

  // The conditional space must be strictly wider than the measurements unless
  // the conditional space has been removed (then n == m).
  void validate(bool require_wider = true) const;
};

// Hidden-layer widths for the three network families.
struct NetworkWidths {
  std::vector<Index> d{25, 25};
  std::vector<Index> e1g1{128, 256, 128};
  std::vector<Index> e2g2{50, 50, 50};
};

// The six networks plus dimension metadata and the fitted normalizer.
// e1: m->n, g1: n->m, d1: (m+n)->1, e2: (1+n)->d_z, g2: (d_z+n)->1,
// d2: (1+d_z+n)->1. Under NoConditionalSpace e1/g1/d1 are empty and n == m;
// under NoEncoderE2 e2 is empty and d2 maps (1+n)->1.
struct BaceRulModel {
  Dimensions dims;
  Ablation ablation = Ablation::None;
  double rul_scale = 0.0;  // labels are multiplied by this internally (1/rul_cap)
  Normalizer normalizer;
  MlpParams<double> e1, g1, d1, e2, g2, d2;

  void validate() const;
};

struct RulPrediction {
  double mean = 0;  // cycles
  double std = 0;   // cycles
  std::vector<double> samples;
};

// Builds the six networks with relu hidden layers, sigmoid discriminator
// outputs, and linear encoder/generator outputs. dropout_rate applies to the
// discriminators' hidden layers.
BaceRulModel make_model(const Dimensions& dims, const NetworkWidths& widths, double dropout_rate,
                        Ablation ablation, Rng& rng);

// Probability floor applied to every discriminator output before a logarithm.
inline double clamp_probability(double p) {
  constexpr double kFloor = 1e-7;
  if (p < kFloor) return kFloor;
  if (p > 1.0 - kFloor) return 1.0 - kFloor;
  return p;
}

// c = E1(x), eval mode; x must already be normalized.
Vec encode_condition(const BaceRulModel& model, const Vec& x);

// x_recon = G1(c), eval mode.
Vec reconstruct_measurements(const BaceRulModel& model, const Vec& c);

// t_gen = G2(concat(z, c)), eval mode, in scaled label units.
double generate_rul(const BaceRulModel& model, const Vec& z, const Vec& c);

// z = E2(concat(t, c)), eval mode; t in scaled label units.
Vec encode_rul(const BaceRulModel& model, double t, const Vec& c);

// D1 score of the joint pair (x, c), clamped into (0, 1).
double discriminate_ce(const BaceRulModel& model, const Vec& x, const Vec& c);

// D2 score of the joint triple (t, z, c), clamped into (0, 1).
double discriminate_rp(const BaceRulModel& model, double t, const Vec& z, const Vec& c);

// Full inference path: normalize raw measurements, encode the condition, draw
// n_samples latent vectors, generate, unscale to cycles and floor at 0.
RulPrediction predict(const BaceRulModel& model, const Vec& x_raw, Rng& rng, int n_samples);

}  // namespace bace
