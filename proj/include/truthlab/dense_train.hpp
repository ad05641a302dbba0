#pragma once

// Training driver for the dense model: fresh synthetic batches every step,
// AdamW updates, and a periodic metric trace (language-model loss on a
// held-out set, memorization accuracy, confidence on false sequences, and
// truth-probe AUC at every layer/site/stage).

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "truthlab/dense.hpp"
#include "truthlab/probes.hpp"
#include "truthlab/world.hpp"

namespace truthlab::dense {

struct DenseTrainConfig {
  DenseConfig model;
  AdamConfig adam{1e-3, 1e-5, 0.9, 0.999, 1e-8};
  double rho = 0.95;
  int batch_size = 64;
  long long total_batches = 20000;
  long long cadence = 250;  // metric/trace interval in steps
  std::uint64_t seed = 1;
  int probe_set_size = 1024;
  int eval_set_size = 512;
  int probe_max_iters = 600;
  double probe_l2 = 1e-3;
  double init_std = 0.02;

  void validate() const {
    model.validate();
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("DenseTrainConfig: rho outside [0,1]");
    if (batch_size < 1) throw std::invalid_argument("DenseTrainConfig: batch_size must be >= 1");
    if (total_batches < 1) throw std::invalid_argument("DenseTrainConfig: total_batches must be >= 1");
    if (cadence < 1) throw std::invalid_argument("DenseTrainConfig: cadence must be >= 1");
    if (probe_set_size < 8 || probe_set_size % 2 != 0)
      throw std::invalid_argument("DenseTrainConfig: probe_set_size must be even and >= 8");
    if (eval_set_size < 1) throw std::invalid_argument("DenseTrainConfig: eval_set_size must be >= 1");
  }
};

struct TraceRow {
  long long step = 0;
  double lm_loss = 0.0;  // on a fixed held-out batch from the training distribution
  PhaseMetrics metrics;
  std::vector<double> auc;  // order given by auc_column_names
};

inline std::vector<std::string> auc_column_names(int n_layers) {
  std::vector<std::string> names;
  for (int l = 0; l < n_layers; ++l)
    for (const char* site : {"y", "xp"})
      for (const char* stage : {"pre", "post"})
        names.push_back("auc_l" + std::to_string(l) + "_" + site + "_" + stage);
  return names;
}

struct TrainResult {
  DenseParams params;
  std::vector<TraceRow> trace;
  data::WorldSpec world;
};

using CheckpointHook = std::function<void(const TraceRow&, const DenseParams&)>;

inline TrainResult train_dense(const DenseTrainConfig& cfg, const CheckpointHook& hook = {}) {
  cfg.validate();
  data::WorldSpec world = data::make_world(cfg.model.n_subjects, cfg.model.n_attributes, cfg.seed);

  rng::Counter eval_rng(cfg.seed, "dense_eval");
  std::vector<int> eval_true, eval_false;
  eval_true.reserve(static_cast<std::size_t>(cfg.eval_set_size) * 4);
  eval_false.reserve(static_cast<std::size_t>(cfg.eval_set_size) * 4);
  for (int i = 0; i < cfg.eval_set_size; ++i) {
    data::Example e = data::sample_example_forced(world, true, eval_rng);
    eval_true.insert(eval_true.end(), {e.x, e.y, e.x_prime, e.y_prime});
  }
  for (int i = 0; i < cfg.eval_set_size; ++i) {
    data::Example e = data::sample_example_forced(world, false, eval_rng);
    eval_false.insert(eval_false.end(), {e.x, e.y, e.x_prime, e.y_prime});
  }
  rng::Counter lm_rng(cfg.seed, "dense_eval_lm");
  data::Batch lm_batch = data::sample_batch(world, cfg.rho, cfg.eval_set_size, lm_rng);
  std::vector<int> lm_tokens = batch_to_tokens(lm_batch);

  rng::Counter probe_rng(cfg.seed, "dense_probe_set");
  data::Batch probe_batch = data::make_balanced_probe_set(world, cfg.probe_set_size, probe_rng);
  std::vector<int> probe_tokens = batch_to_tokens(probe_batch);
  std::vector<int> probe_labels;
  probe_labels.reserve(probe_batch.examples.size());
  for (const data::Example& e : probe_batch.examples) probe_labels.push_back(e.truth ? 1 : 0);

  TrainResult result{DenseParams::init(cfg.model, cfg.seed, cfg.init_std), {}, world};
  AdamState adam = AdamState::shaped(cfg.model);
  DenseTensors grads = DenseTensors::shaped(cfg.model);

  DenseCache train_cache, eval_cache, probe_cache;
  DenseWorkspace ws;

  probes::ProbeOptions popt;
  popt.l2 = cfg.probe_l2;
  popt.max_iters = cfg.probe_max_iters;
  popt.seed = cfg.seed ^ 0x70726f6265ULL;  // probe split stream, fixed within the run

  auto record = [&](long long step) {
    TraceRow row;
    row.step = step;
    dense_forward(result.params, lm_tokens, eval_cache);
    row.lm_loss = dense_loss(eval_cache, lm_tokens, cfg.model.seq_len);
    row.metrics = phase_metrics(result.params, world, eval_true, eval_false, eval_cache);
    dense_forward(result.params, probe_tokens, probe_cache);
    for (int l = 0; l < cfg.model.n_layers; ++l)
      for (Site site : {Site::y, Site::x_prime})
        for (Stage stage : {Stage::pre_norm, Stage::post_norm}) {
          la::Mat acts = slice_activations(probe_cache, l, site, stage, cfg.model.seq_len);
          probes::ProbeFit fit = probes::fit_logistic_probe(acts, probe_labels, popt);
          row.auc.push_back(fit.test_auc);
        }
    result.trace.push_back(row);
    if (hook) hook(row, result.params);
  };

  record(0);
  rng::Counter train_rng(cfg.seed, "dense_train");
  for (long long step = 1; step <= cfg.total_batches; ++step) {
    data::Batch batch = data::sample_batch(world, cfg.rho, cfg.batch_size, train_rng, cfg.seed);
    std::vector<int> tokens = batch_to_tokens(batch);
    double loss = dense_loss_and_grads(result.params, tokens, train_cache, grads, ws);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_dense: loss diverged at step " + std::to_string(step));
    adamw_step(result.params, grads, adam, cfg.adam);
    if (step % cfg.cadence == 0 || step == cfg.total_batches) record(step);
  }
  return result;
}

}  // namespace truthlab::dense
