#include "bace/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "bace/format.hpp"

namespace bace {

namespace {

constexpr std::uint64_t kInitStream = 0x1717;
constexpr std::uint64_t kDropoutStream = 0xD509;
constexpr std::uint64_t kCeStreamBase = 0xCE00000000ull;
constexpr std::uint64_t kRpStreamBase = 0xA900000000ull;

void scale_grads(MlpGradsD& g, double factor) {
  if (factor == 1.0) return;
  for (auto& w : g.weights) w *= factor;
  for (auto& b : g.biases) b *= factor;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (k_ge_updates < 2) throw ConfigError("k_ge_updates must be >= 2");
  if (d_updates < 1) throw ConfigError("d_updates must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (stop_window < 1) throw ConfigError("stop_window must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout_rate must lie in [0, 1)");
  if (!(weights.lambda11 >= 0 && weights.lambda12 >= 0 && weights.lambda21 >= 0 &&
        weights.lambda22 >= 0))
    throw ConfigError("loss weights must be non-negative");
}

Trainer::Trainer(std::vector<LabeledSample> train_data, TrainConfig cfg)
    : data_(std::move(train_data)), cfg_(std::move(cfg)), dropout_rng_(0) {
  cfg_.validate();
  if (data_.empty()) throw ConfigError("training data is empty");
  for (const LabeledSample& s : data_) {
    if (s.x.size() != cfg_.dims.m)
      throw ShapeError("training sample feature width does not match m");
    if (s.stage == Stage::Accelerated)
      accel_idx_.push_back(&s - data_.data());
    else
      normal_idx_.push_back(&s - data_.data());
  }
  if (accel_idx_.empty())
    throw ConfigError("training requires at least one accelerated-stage sample");

  Rng init_rng(mix_seed(cfg_.seed, kInitStream));
  model_ = make_model(cfg_.dims, cfg_.widths, cfg_.dropout_rate, cfg_.ablation, init_rng);
  dropout_rng_ = Rng(mix_seed(cfg_.seed, kDropoutStream));

  adam_e1_ = AdamState<double>::like(model_.e1, cfg_.learning_rate);
  adam_g1_ = AdamState<double>::like(model_.g1, cfg_.learning_rate);
  adam_d1_ = AdamState<double>::like(model_.d1, cfg_.learning_rate);
  adam_e2_ = AdamState<double>::like(model_.e2, cfg_.learning_rate);
  adam_g2_ = AdamState<double>::like(model_.g2, cfg_.learning_rate);
  adam_d2_ = AdamState<double>::like(model_.d2, cfg_.learning_rate);
}

CeBatch Trainer::make_ce_batch(int iteration) const {
  Rng rng(mix_seed(cfg_.seed, kCeStreamBase + static_cast<std::uint64_t>(iteration)));
  CeBatch batch;
  batch.xs.reserve(cfg_.batch_size);
  batch.c_eps.reserve(cfg_.batch_size);
  for (int b = 0; b < cfg_.batch_size; ++b) {
    batch.xs.push_back(data_[rng.index(data_.size())].x);
    batch.c_eps.push_back(rng.uniform_vec(model_.dims.n, -1.0, 1.0));
  }
  return batch;
}

RpBatch Trainer::make_rp_batch(int iteration) const {
  Rng rng(mix_seed(cfg_.seed, kRpStreamBase + static_cast<std::uint64_t>(iteration)));
  RpBatch batch;
  const Index d_z = model_.dims.d_z;
  auto draw = [&](const std::vector<std::size_t>& pool, std::vector<double>& ts,
                  std::vector<Vec>& cs, std::vector<Vec>& zs) {
    for (int b = 0; b < cfg_.batch_size; ++b) {
      const LabeledSample& s =
          pool.empty() ? data_[rng.index(data_.size())] : data_[pool[rng.index(pool.size())]];
      ts.push_back(s.t * model_.rul_scale);
      cs.push_back(encode_condition(model_, s.x));
      zs.push_back(rng.uniform_vec(d_z, -1.0, 1.0));
    }
  };
  draw(accel_idx_, batch.t_accel, batch.c_accel, batch.z_accel);
  if (!normal_idx_.empty()) draw(normal_idx_, batch.t_normal, batch.c_normal, batch.z_normal);
  std::vector<std::size_t> empty_pool;
  draw(empty_pool, batch.t_all, batch.c_all, batch.z_all);
  return batch;
}

void Trainer::ce_phase(const CeBatch& batch) {
  MlpGradsD grad_d1 = MlpGradsD::zeros_like(model_.d1);
  for (int u = 0; u < cfg_.d_updates; ++u) {
    grad_d1.set_zero();
    loss_d1_grads(model_, batch, Mode::Train, &dropout_rng_, grad_d1);
    scale_grads(grad_d1, cfg_.weights.lambda11);
    adam_step(adam_d1_, model_.d1, grad_d1);
  }

  MlpGradsD adv_e1 = MlpGradsD::zeros_like(model_.e1);
  MlpGradsD adv_g1 = MlpGradsD::zeros_like(model_.g1);
  MlpGradsD tot_e1 = MlpGradsD::zeros_like(model_.e1);
  MlpGradsD tot_g1 = MlpGradsD::zeros_like(model_.g1);
  for (int u = 0; u < cfg_.k_ge_updates; ++u) {
    adv_e1.set_zero();
    adv_g1.set_zero();
    loss_e1g1_grads(model_, batch, Mode::Train, &dropout_rng_, adv_e1, adv_g1);
    tot_e1.set_zero();
    tot_g1.set_zero();
    loss_recon1_grads(model_, batch.xs, Mode::Train, &dropout_rng_, tot_e1, tot_g1);
    tot_e1.add_scaled(adv_e1, cfg_.weights.lambda12);
    tot_g1.add_scaled(adv_g1, cfg_.weights.lambda12);
    adam_step(adam_e1_, model_.e1, tot_e1);
    adam_step(adam_g1_, model_.g1, tot_g1);
  }
}

void Trainer::rp_phase(const RpBatch& batch) {
  const bool no_e2 = cfg_.ablation == Ablation::NoEncoderE2;

  MlpGradsD grad_d2 = MlpGradsD::zeros_like(model_.d2);
  for (int u = 0; u < cfg_.d_updates; ++u) {
    grad_d2.set_zero();
    loss_d2_grads(model_, batch, Mode::Train, &dropout_rng_, grad_d2);
    scale_grads(grad_d2, cfg_.weights.lambda21);
    adam_step(adam_d2_, model_.d2, grad_d2);
  }

  MlpGradsD adv_g2 = MlpGradsD::zeros_like(model_.g2);
  MlpGradsD adv_e2 = MlpGradsD::zeros_like(model_.e2);
  MlpGradsD tot_g2 = MlpGradsD::zeros_like(model_.g2);
  MlpGradsD tot_e2 = MlpGradsD::zeros_like(model_.e2);
  MlpGradsD dist_g2 = MlpGradsD::zeros_like(model_.g2);
  for (int u = 0; u < cfg_.k_ge_updates; ++u) {
    adv_g2.set_zero();
    adv_e2.set_zero();
    loss_e2g2_grads(model_, batch, Mode::Train, &dropout_rng_, adv_g2, no_e2 ? nullptr : &adv_e2);
    tot_g2.set_zero();
    tot_e2.set_zero();
    if (!no_e2) loss_recon2_grads(model_, batch, Mode::Train, &dropout_rng_, tot_g2, tot_e2);
    dist_g2.set_zero();
    loss_dist_grads(model_, batch, Mode::Train, &dropout_rng_, dist_g2);
    tot_g2.add_scaled(adv_g2, cfg_.weights.lambda22);
    tot_g2.add_scaled(dist_g2, 1.0);
    adam_step(adam_g2_, model_.g2, tot_g2);
    if (!no_e2) {
      tot_e2.add_scaled(adv_e2, cfg_.weights.lambda22);
      adam_step(adam_e2_, model_.e2, tot_e2);
    }
  }
}

void Trainer::record_ce(IterationLosses& rec, const CeBatch& batch) const {
  rec.d1 = loss_d1(model_, batch);
  rec.e1g1 = loss_e1g1(model_, batch);
  rec.recon1 = loss_recon1(model_, batch.xs);
  rec.comp_ce = composite_ce(cfg_.weights, *rec.d1, *rec.e1g1, *rec.recon1);
}

void Trainer::record_rp(IterationLosses& rec, const RpBatch& batch) const {
  rec.d2 = loss_d2(model_, batch);
  rec.e2g2 = loss_e2g2(model_, batch);
  if (cfg_.ablation != Ablation::NoEncoderE2) rec.recon2 = loss_recon2(model_, batch);
  rec.dist = loss_dist(model_, batch);
  rec.dist_hinge = loss_dist_hinge(model_, batch);
  rec.comp_rp = composite_rp(cfg_.weights, rec.d2, rec.e2g2, rec.recon2.value_or(0.0), rec.dist);
}

// Each phase's losses are recorded in eval mode on the phase's own batch at
// the moment the batch is drawn, i.e. the values the updates are about to
// descend.
void Trainer::step() {
  ++iteration_;
  try {
    IterationLosses rec;
    if (cfg_.ablation != Ablation::NoConditionalSpace) {
      const CeBatch ce_batch = make_ce_batch(iteration_);
      record_ce(rec, ce_batch);
      ce_phase(ce_batch);
    }
    const RpBatch rp_batch = make_rp_batch(iteration_);
    record_rp(rec, rp_batch);
    rp_phase(rp_batch);
    history_.push_back(std::move(rec));
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " (iteration " + std::to_string(iteration_) + ")");
  }
}

double Trainer::stop_signal(const IterationLosses& rec) const {
  // L_recon2 stagnation drives stopping; without E2 the distortion loss is
  // the closest convergence signal.
  return rec.recon2 ? *rec.recon2 : rec.dist;
}

bool Trainer::should_stop() {
  if (iteration_ % cfg_.eval_every == 0 &&
      static_cast<int>(history_.size()) >= cfg_.stop_window) {
    double ma = 0;
    for (int i = 0; i < cfg_.stop_window; ++i)
      ma += stop_signal(history_[history_.size() - 1 - i]);
    ma /= cfg_.stop_window;
    if (ma < best_signal_) {
      best_signal_ = ma;
      best_model_ = model_;
      best_iteration_ = iteration_;
      has_best_ = true;
      stalled_evals_ = 0;
    } else if (++stalled_evals_ >= cfg_.patience) {
      stop_reason_ = StopReason::Patience;
      return true;
    }
  }
  if (iteration_ >= cfg_.max_iterations) {
    stop_reason_ = StopReason::MaxIterations;
    return true;
  }
  return false;
}

const BaceRulModel& Trainer::best_model() const { return has_best_ ? best_model_ : model_; }

AdamCounters Trainer::adam_counters() const {
  return {adam_d1_.step_count, adam_e1_.step_count, adam_g1_.step_count,
          adam_d2_.step_count, adam_e2_.step_count, adam_g2_.step_count};
}

std::pair<BaceRulModel, TrainReport> train(const std::vector<LabeledSample>& train_data,
                                           const TrainConfig& cfg) {
  Trainer trainer(train_data, cfg);
  while (true) {
    trainer.step();
    if (trainer.should_stop()) break;
  }
  TrainReport report;
  report.iterations = trainer.history();
  report.stop_reason = trainer.stop_reason();
  report.best_iteration = trainer.best_iteration() > 0 ? trainer.best_iteration()
                                                       : trainer.iteration();
  return {trainer.best_model(), std::move(report)};
}

void write_report_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "d1,e1g1,recon1,d2,e2g2,recon2,dist,composite_ce,composite_rp\n";
  auto cell = [&](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const IterationLosses& r : report.iterations) {
    out << cell(r.d1) << ',' << cell(r.e1g1) << ',' << cell(r.recon1) << ','
        << format_double(r.d2) << ',' << format_double(r.e2g2) << ',' << cell(r.recon2) << ','
        << format_double(r.dist) << ',' << cell(r.comp_ce) << ',' << format_double(r.comp_rp)
        << '\n';
  }
  if (!out) throw DataError("failed while writing " + path.string());
}

}  // namespace bace
