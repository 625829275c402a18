#include "bace/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace bace {

void Dimensions::validate(bool require_wider) const {
  if (m < 1 || n < 1 || d_z < 1) throw ConfigError("dimensions must be >= 1");
  if (rul_cap < 1) throw ConfigError("rul_cap must be >= 1");
  if (require_wider && n <= m)
    throw ConfigError("conditional space must be wider than the measurements (n > m; got n=" +
                      std::to_string(n) + ", m=" + std::to_string(m) + ")");
}

namespace {

void check_net(const MlpParams<double>& net, Index in, Index out, const char* name) {
  if (net.input_dim() != in || net.output_dim() != out)
    throw ConfigError(std::string(name) + " must map " + std::to_string(in) + "->" +
                      std::to_string(out) + ", maps " + std::to_string(net.input_dim()) + "->" +
                      std::to_string(net.output_dim()));
}

Vec concat(std::initializer_list<const Vec*> parts) {
  Index total = 0;
  for (const Vec* p : parts) total += p->size();
  Vec out(total);
  Index at = 0;
  for (const Vec* p : parts) {
    out.segment(at, p->size()) = *p;
    at += p->size();
  }
  return out;
}

void require_finite(const Vec& v, const char* what) {
  if (!all_finite(v)) throw NumericError(std::string(what) + " contains NaN/Inf");
}

}  // namespace

void BaceRulModel::validate() const {
  dims.validate(ablation != Ablation::NoConditionalSpace);
  if (rul_scale <= 0) throw ConfigError("rul_scale must be positive");
  if (ablation == Ablation::NoConditionalSpace) {
    if (!e1.empty() || !g1.empty() || !d1.empty())
      throw ConfigError("conditional-space networks present under NoConditionalSpace");
    if (dims.n != dims.m) throw ConfigError("NoConditionalSpace requires n == m");
  } else {
    check_net(e1, dims.m, dims.n, "e1");
    check_net(g1, dims.n, dims.m, "g1");
    check_net(d1, dims.m + dims.n, 1, "d1");
  }
  if (ablation == Ablation::NoEncoderE2) {
    if (!e2.empty()) throw ConfigError("e2 present under NoEncoderE2");
    check_net(d2, 1 + dims.n, 1, "d2");
  } else {
    check_net(e2, 1 + dims.n, dims.d_z, "e2");
    check_net(d2, 1 + dims.d_z + dims.n, 1, "d2");
  }
  check_net(g2, dims.d_z + dims.n, 1, "g2");
  if (normalizer.dim() != dims.m) throw ConfigError("normalizer width does not match m");
}

BaceRulModel make_model(const Dimensions& dims, const NetworkWidths& widths, double dropout_rate,
                        Ablation ablation, Rng& rng) {
  Dimensions d = dims;
  if (ablation == Ablation::NoConditionalSpace) d.n = d.m;
  d.validate(ablation != Ablation::NoConditionalSpace);

  BaceRulModel model;
  model.dims = d;
  model.ablation = ablation;
  model.rul_scale = 1.0 / d.rul_cap;
  model.normalizer.mean = Vec::Zero(d.m);
  model.normalizer.stddev = Vec::Ones(d.m);

  // Dropout regularizes the discriminators only. Encoders and generators run
  // without it: a dropout-noised reconstruction path behaves as a denoiser
  // and leaves a permanent floor under both reconstruction losses.
  if (ablation != Ablation::NoConditionalSpace) {
    model.e1 = init_mlp(make_mlp_spec(d.m, widths.e1g1, d.n, Activation::Linear, 0.0), rng);
    model.g1 = init_mlp(make_mlp_spec(d.n, widths.e1g1, d.m, Activation::Linear, 0.0), rng);
    model.d1 =
        init_mlp(make_mlp_spec(d.m + d.n, widths.d, 1, Activation::Sigmoid, dropout_rate), rng);
  }
  if (ablation != Ablation::NoEncoderE2)
    model.e2 = init_mlp(make_mlp_spec(1 + d.n, widths.e2g2, d.d_z, Activation::Linear, 0.0), rng);
  model.g2 = init_mlp(make_mlp_spec(d.d_z + d.n, widths.e2g2, 1, Activation::Linear, 0.0), rng);
  const Index d2_in = ablation == Ablation::NoEncoderE2 ? 1 + d.n : 1 + d.d_z + d.n;
  model.d2 = init_mlp(make_mlp_spec(d2_in, widths.d, 1, Activation::Sigmoid, dropout_rate), rng);

  model.validate();
  return model;
}

Vec encode_condition(const BaceRulModel& model, const Vec& x) {
  if (x.size() != model.dims.m) throw ShapeError("encode_condition: x has wrong length");
  if (model.ablation == Ablation::NoConditionalSpace) return x;
  return forward_eval(model.e1, x);
}

Vec reconstruct_measurements(const BaceRulModel& model, const Vec& c) {
  if (model.ablation == Ablation::NoConditionalSpace)
    throw ConfigError("reconstruct_measurements: conditional space removed");
  if (c.size() != model.dims.n) throw ShapeError("reconstruct_measurements: c has wrong length");
  return forward_eval(model.g1, c);
}

double generate_rul(const BaceRulModel& model, const Vec& z, const Vec& c) {
  if (z.size() != model.dims.d_z || c.size() != model.dims.n)
    throw ShapeError("generate_rul: input lengths do not match (d_z, n)");
  return forward_eval(model.g2, concat({&z, &c}))[0];
}

Vec encode_rul(const BaceRulModel& model, double t, const Vec& c) {
  if (model.ablation == Ablation::NoEncoderE2) throw ConfigError("encode_rul: encoder removed");
  if (c.size() != model.dims.n) throw ShapeError("encode_rul: c has wrong length");
  Vec tc(1 + c.size());
  tc[0] = t;
  tc.tail(c.size()) = c;
  return forward_eval(model.e2, tc);
}

double discriminate_ce(const BaceRulModel& model, const Vec& x, const Vec& c) {
  if (model.ablation == Ablation::NoConditionalSpace)
    throw ConfigError("discriminate_ce: conditional space removed");
  if (x.size() != model.dims.m || c.size() != model.dims.n)
    throw ShapeError("discriminate_ce: input lengths do not match (m, n)");
  return clamp_probability(forward_eval(model.d1, concat({&x, &c}))[0]);
}

double discriminate_rp(const BaceRulModel& model, double t, const Vec& z, const Vec& c) {
  if (c.size() != model.dims.n) throw ShapeError("discriminate_rp: c has wrong length");
  Vec in;
  if (model.ablation == Ablation::NoEncoderE2) {
    in.resize(1 + c.size());
    in[0] = t;
    in.tail(c.size()) = c;
  } else {
    if (z.size() != model.dims.d_z) throw ShapeError("discriminate_rp: z has wrong length");
    in.resize(1 + z.size() + c.size());
    in[0] = t;
    in.segment(1, z.size()) = z;
    in.tail(c.size()) = c;
  }
  return clamp_probability(forward_eval(model.d2, in)[0]);
}

RulPrediction predict(const BaceRulModel& model, const Vec& x_raw, Rng& rng, int n_samples) {
  if (n_samples < 1) throw ConfigError("predict: n_samples must be >= 1");
  if (x_raw.size() != model.dims.m) throw ShapeError("predict: feature width does not match m");
  require_finite(x_raw, "predict input");

  const Vec x = model.normalizer.apply(x_raw);
  const Vec c = encode_condition(model, x);
  RulPrediction pred;
  pred.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const Vec z = rng.uniform_vec(model.dims.d_z, -1.0, 1.0);
    const double t_cycles = generate_rul(model, z, c) / model.rul_scale;
    pred.samples.push_back(std::max(0.0, t_cycles));
  }
  const double n = static_cast<double>(pred.samples.size());
  pred.mean = std::accumulate(pred.samples.begin(), pred.samples.end(), 0.0) / n;
  double var = 0;
  for (double s : pred.samples) var += (s - pred.mean) * (s - pred.mean);
  pred.std = std::sqrt(var / n);
  return pred;
}

}  // namespace bace
