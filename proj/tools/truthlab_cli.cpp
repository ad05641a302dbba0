// Configuration-driven experiment runner. Subcommands cover data generation,
// both model trainers, probing, closed-form verification, co-occurrence
// statistics, and kernel/attention exports. Every output file embeds
// {config_hash, seed, version}; invalid configs exit nonzero with a
// machine-readable error JSON on stderr naming the offending field.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "truthlab/checkpoint.hpp"
#include "truthlab/config.hpp"
#include "truthlab/cooccur.hpp"
#include "truthlab/dense.hpp"
#include "truthlab/dense_train.hpp"
#include "truthlab/io.hpp"
#include "truthlab/onehot.hpp"
#include "truthlab/population.hpp"
#include "truthlab/probes.hpp"
#include "truthlab/rng.hpp"
#include "truthlab/theory.hpp"
#include "truthlab/version.hpp"
#include "truthlab/world.hpp"

namespace tl = truthlab;
namespace la = truthlab::la;
using nlohmann::json;
using tl::config::Config;
using tl::config::ConfigError;

namespace {

struct Context {
  Config cfg;
  std::string out_dir;

  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }
  tl::io::OutputMeta meta(std::uint64_t seed) const {
    return tl::io::OutputMeta{cfg.hash_hex(), seed, tl::kArtifactVersion};
  }
};

Context make_context(const std::string& config_path, const std::string& out_dir) {
  Context ctx;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config", "cannot open " + config_path);
    ctx.cfg = tl::config::parse_config(in);
  }
  ctx.out_dir = out_dir;
  std::filesystem::create_directories(out_dir);
  return ctx;
}

double require_unit_interval(const Config& cfg, const std::string& key) {
  double v = cfg.require_double(key);
  if (v < 0.0 || v > 1.0) throw ConfigError(key, "must lie in [0, 1]");
  return v;
}

long long require_positive_int(const Config& cfg, const std::string& key) {
  long long v = cfg.require_int(key);
  if (v < 1) throw ConfigError(key, "must be >= 1");
  return v;
}

tl::data::WorldSpec world_from_config(const Config& cfg) {
  long long n_s = require_positive_int(cfg, "world.n_subjects");
  long long n_a = require_positive_int(cfg, "world.n_attributes");
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("world.seed", 1));
  return tl::data::make_world(static_cast<int>(n_s), static_cast<int>(n_a), seed);
}

int cmd_generate(const Context& ctx) {
  tl::data::WorldSpec world = world_from_config(ctx.cfg);
  double rho = require_unit_interval(ctx.cfg, "generate.rho");
  long long size = require_positive_int(ctx.cfg, "generate.size");
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("generate.seed", 1));
  tl::rng::Counter rng(seed, "generate");
  tl::data::Batch batch = tl::data::sample_batch(world, rho, static_cast<int>(size), rng, seed);

  tl::io::OutputMeta meta = ctx.meta(seed);
  tl::io::CsvWriter csv(ctx.path("batch.csv"), meta);
  csv.header({"x", "y", "x_prime", "y_prime", "truth"});
  for (const tl::data::Example& e : batch.examples)
    csv.row({tl::io::fmt(e.x), tl::io::fmt(e.y), tl::io::fmt(e.x_prime), tl::io::fmt(e.y_prime),
             e.truth ? "1" : "0"});
  tl::io::write_json_file(ctx.path("world.json"), json{{"world", tl::data::world_to_json(world)}}, meta);
  std::cout << "wrote " << ctx.path("batch.csv") << " (" << batch.examples.size() << " rows)\n";
  return 0;
}

int cmd_train_toy(const Context& ctx) {
  tl::data::WorldSpec world = world_from_config(ctx.cfg);
  if (!world.toy_mode()) throw ConfigError("world.n_attributes", "toy training needs n_attributes = n_subjects");
  tl::toy::OneHotConfig mc = tl::toy::OneHotConfig::make(world.n_subjects);
  mc.beta = ctx.cfg.get_double("toy.beta", mc.beta);
  mc.include_positions = ctx.cfg.get_bool("toy.include_positions", true);
  double rho = require_unit_interval(ctx.cfg, "train.rho");
  double lr = ctx.cfg.require_double("train.lr");
  if (lr <= 0.0) throw ConfigError("train.lr", "must be > 0");
  long long batch = require_positive_int(ctx.cfg, "train.batch_size");
  long long steps = require_positive_int(ctx.cfg, "train.steps");
  long long every = require_positive_int(ctx.cfg, "train.snapshot_every");
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("train.seed", 1));

  std::vector<tl::toy::SgdSnapshot> snaps = tl::toy::minibatch_sgd_train(
      mc, world, rho, lr, static_cast<int>(batch), steps, every, seed);

  tl::io::OutputMeta meta = ctx.meta(seed);
  tl::io::CsvWriter csv(ctx.path("toy_trace.csv"), meta);
  csv.header({"step", "loss_t1", "loss_t3", "alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2",
              "gamma3", "block_ex_ugx", "block_ex_diag", "block_ey_eginv", "block_ey_uy", "residual",
              "off_structure_max"});
  for (const tl::toy::SgdSnapshot& s : snaps) {
    tl::toy::StructuredFit fit = tl::toy::fit_structured(mc, s.W, world);
    double l1 = tl::toy::population_loss(mc, s.W, world, rho, 1);
    double l3 = tl::toy::population_loss(mc, s.W, world, rho, 3);
    csv.row({tl::io::fmt(s.step), tl::io::fmt(l1), tl::io::fmt(l3), tl::io::fmt(fit.coeffs.alpha1),
             tl::io::fmt(fit.coeffs.alpha2), tl::io::fmt(fit.coeffs.beta1), tl::io::fmt(fit.coeffs.beta2),
             tl::io::fmt(fit.coeffs.gamma1), tl::io::fmt(fit.coeffs.gamma2), tl::io::fmt(fit.coeffs.gamma3),
             tl::io::fmt(fit.blocks.ex_to_ugx), tl::io::fmt(fit.blocks.ex_diagonal),
             tl::io::fmt(fit.blocks.ey_to_eginv), tl::io::fmt(fit.blocks.ey_to_uy),
             tl::io::fmt(fit.residual), tl::io::fmt(fit.off_structure_max)});
  }
  json ckmeta = tl::io::meta_json(meta);
  ckmeta["world"] = tl::data::world_to_json(world);
  ckmeta["toy"] = json{{"N", mc.N}, {"beta", mc.beta}, {"include_positions", mc.include_positions}};
  tl::ckpt::write_checkpoint(ctx.path("toy_final.tlck"),
                             tl::ckpt::pack_matrix(snaps.back().W, "W", ckmeta));
  std::cout << "wrote " << ctx.path("toy_trace.csv") << " (" << snaps.size() << " snapshots)\n";
  return 0;
}

int cmd_train_dense(const Context& ctx) {
  tl::dense::DenseTrainConfig tc;
  tc.model.n_subjects = static_cast<int>(require_positive_int(ctx.cfg, "world.n_subjects"));
  tc.model.n_attributes = static_cast<int>(require_positive_int(ctx.cfg, "world.n_attributes"));
  tc.model.n_layers = static_cast<int>(ctx.cfg.get_int("model.layers", 1));
  tc.model.d_model = static_cast<int>(ctx.cfg.get_int("model.d_model", 64));
  tc.model.norm_epsilon = ctx.cfg.get_double("model.norm_epsilon", 1e-6);
  tc.model.embeddings_trainable = ctx.cfg.get_bool("model.embeddings_trainable", true);
  tc.rho = require_unit_interval(ctx.cfg, "train.rho");
  tc.adam.lr = ctx.cfg.get_double("train.lr", tc.adam.lr);
  tc.adam.weight_decay = ctx.cfg.get_double("train.weight_decay", tc.adam.weight_decay);
  tc.batch_size = static_cast<int>(ctx.cfg.get_int("train.batch_size", tc.batch_size));
  tc.total_batches = ctx.cfg.get_int("train.total_batches", tc.total_batches);
  tc.cadence = ctx.cfg.get_int("train.cadence", tc.cadence);
  tc.seed = static_cast<std::uint64_t>(ctx.cfg.get_int("train.seed", 1));
  tc.probe_set_size = static_cast<int>(ctx.cfg.get_int("train.probe_set_size", tc.probe_set_size));
  tc.eval_set_size = static_cast<int>(ctx.cfg.get_int("train.eval_set_size", tc.eval_set_size));
  tc.probe_max_iters = static_cast<int>(ctx.cfg.get_int("train.probe_max_iters", tc.probe_max_iters));
  tc.init_std = ctx.cfg.get_double("train.init_std", tc.init_std);
  long long checkpoint_every = ctx.cfg.get_int("train.checkpoint_every", 0);
  if (tc.adam.lr <= 0.0) throw ConfigError("train.lr", "must be > 0");
  if (tc.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (tc.total_batches < 1) throw ConfigError("train.total_batches", "must be >= 1");
  if (tc.cadence < 1) throw ConfigError("train.cadence", "must be >= 1");
  if (tc.probe_set_size < 8 || tc.probe_set_size % 2 != 0)
    throw ConfigError("train.probe_set_size", "must be even and >= 8");

  tl::io::OutputMeta meta = ctx.meta(tc.seed);
  tl::io::CsvWriter csv(ctx.path("dense_trace.csv"), meta);
  std::vector<std::string> columns = {"step", "lm_loss", "memorization", "p_true_on_false",
                                      "entropy_false"};
  for (const std::string& name : tl::dense::auc_column_names(tc.model.n_layers)) columns.push_back(name);
  csv.header(columns);

  json world_json;
  tl::dense::CheckpointHook hook = [&](const tl::dense::TraceRow& row, const tl::dense::DenseParams& p) {
    std::vector<std::string> cells = {tl::io::fmt(row.step), tl::io::fmt(row.lm_loss),
                                      tl::io::fmt(row.metrics.memorization),
                                      tl::io::fmt(row.metrics.p_true_on_false),
                                      tl::io::fmt(row.metrics.entropy_false)};
    for (double a : row.auc) cells.push_back(tl::io::fmt(a));
    csv.row(cells);
    if (checkpoint_every > 0 && row.step > 0 && row.step % checkpoint_every == 0) {
      json ckmeta = tl::io::meta_json(ctx.meta(tc.seed));
      ckmeta["step"] = row.step;
      ckmeta["world"] = world_json;
      tl::ckpt::write_checkpoint(ctx.path("checkpoint_" + std::to_string(row.step) + ".tlck"),
                                 tl::ckpt::pack_dense(p, ckmeta));
    }
  };

  // The hook needs the world layout before train_dense builds it; mirror the
  // construction (same seed, same stream).
  world_json = tl::data::world_to_json(
      tl::data::make_world(tc.model.n_subjects, tc.model.n_attributes, tc.seed));

  tl::dense::TrainResult result = tl::dense::train_dense(tc, hook);
  json ckmeta = tl::io::meta_json(meta);
  ckmeta["step"] = tc.total_batches;
  ckmeta["world"] = tl::data::world_to_json(result.world);
  tl::ckpt::write_checkpoint(ctx.path("dense_final.tlck"), tl::ckpt::pack_dense(result.params, ckmeta));
  std::cout << "wrote " << ctx.path("dense_trace.csv") << " (" << result.trace.size() << " checkpoints)\n";
  return 0;
}

int cmd_probe(const Context& ctx) {
  std::string ck_path = ctx.cfg.require_string("probe.checkpoint");
  tl::ckpt::Checkpoint ck = tl::ckpt::read_checkpoint(ck_path);
  if (!ck.meta.contains("model")) throw ConfigError("probe.checkpoint", "not a dense model checkpoint");
  tl::dense::DenseParams params = tl::ckpt::unpack_dense(ck);
  if (!ck.meta.contains("world")) throw ConfigError("probe.checkpoint", "checkpoint lacks world metadata");
  tl::data::WorldSpec world = tl::data::world_from_json(ck.meta["world"]);

  long long size = ctx.cfg.get_int("probe.size", 1024);
  if (size < 8 || size % 2 != 0) throw ConfigError("probe.size", "must be even and >= 8");
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("probe.seed", 1));
  tl::probes::ProbeOptions popt;
  popt.l2 = ctx.cfg.get_double("probe.l2", popt.l2);
  popt.max_iters = static_cast<int>(ctx.cfg.get_int("probe.max_iters", popt.max_iters));
  popt.seed = seed;
  int pca_k = static_cast<int>(ctx.cfg.get_int("probe.pca_k", 2));

  tl::rng::Counter rng(seed, "probe_cmd");
  tl::data::Batch probe_set = tl::data::make_balanced_probe_set(world, static_cast<int>(size), rng);
  std::vector<int> tokens = tl::dense::batch_to_tokens(probe_set);
  std::vector<int> labels;
  for (const tl::data::Example& e : probe_set.examples) labels.push_back(e.truth ? 1 : 0);

  tl::dense::DenseCache cache;
  tl::dense::dense_forward(params, tokens, cache);

  tl::io::OutputMeta meta = ctx.meta(seed);
  tl::io::CsvWriter report(ctx.path("probe_report.csv"), meta);
  report.header({"layer", "site", "stage", "auc", "accuracy", "weight_norm", "n_train", "n_test",
                 "iters", "converged"});
  tl::io::CsvWriter pca_summary(ctx.path("pca_summary.csv"), meta);
  pca_summary.header({"layer", "site", "stage", "component", "eigenvalue", "explained_ratio"});
  tl::io::CsvWriter pca_proj(ctx.path("pca_projections.csv"), meta);
  std::vector<std::string> proj_cols = {"layer", "site", "stage", "sample", "truth"};
  for (int c = 0; c < pca_k; ++c) proj_cols.push_back("pc" + std::to_string(c + 1));
  pca_proj.header(proj_cols);

  for (int l = 0; l < params.cfg.n_layers; ++l) {
    for (tl::dense::Site site : {tl::dense::Site::y, tl::dense::Site::x_prime}) {
      for (tl::dense::Stage stage : {tl::dense::Stage::pre_norm, tl::dense::Stage::post_norm}) {
        la::Mat acts = tl::dense::slice_activations(cache, l, site, stage, params.cfg.seq_len);
        tl::probes::ProbeFit fit = tl::probes::fit_logistic_probe(acts, labels, popt);
        double wnorm = std::sqrt(tl::la::norm2(fit.weights.data(), static_cast<int>(fit.weights.size())));
        const char* site_name = site == tl::dense::Site::y ? "y" : "xp";
        const char* stage_name = stage == tl::dense::Stage::pre_norm ? "pre" : "post";
        report.row({tl::io::fmt(l), site_name, stage_name, tl::io::fmt(fit.test_auc),
                    tl::io::fmt(fit.test_accuracy), tl::io::fmt(wnorm), tl::io::fmt(fit.n_train),
                    tl::io::fmt(fit.n_test), tl::io::fmt(fit.iters), fit.converged ? "1" : "0"});
        if (pca_k > 0 && pca_k <= acts.cols) {
          tl::probes::PcaResult pca = tl::probes::pca_topk(acts, pca_k);
          for (int c = 0; c < pca_k; ++c)
            pca_summary.row({tl::io::fmt(l), site_name, stage_name, tl::io::fmt(c + 1),
                             tl::io::fmt(pca.eigenvalues[static_cast<std::size_t>(c)]),
                             tl::io::fmt(pca.explained_ratio[static_cast<std::size_t>(c)])});
          std::vector<double> mean(static_cast<std::size_t>(acts.cols), 0.0);
          for (int i = 0; i < acts.rows; ++i)
            for (int j = 0; j < acts.cols; ++j) mean[static_cast<std::size_t>(j)] += acts(i, j);
          for (double& m : mean) m /= acts.rows;
          for (int i = 0; i < acts.rows; ++i) {
            std::vector<std::string> cells = {tl::io::fmt(l), site_name, stage_name, tl::io::fmt(i),
                                              labels[static_cast<std::size_t>(i)] ? "1" : "0"};
            for (int c = 0; c < pca_k; ++c) {
              double proj = 0.0;
              for (int j = 0; j < acts.cols; ++j)
                proj += (acts(i, j) - mean[static_cast<std::size_t>(j)]) * pca.components(c, j);
              cells.push_back(tl::io::fmt(proj));
            }
            pca_proj.row(cells);
          }
        }
      }
    }
  }
  std::cout << "wrote " << ctx.path("probe_report.csv") << "\n";
  return 0;
}

int cmd_verify(const Context& ctx) {
  int n = static_cast<int>(ctx.cfg.get_int("verify.n", 20));
  int draws = static_cast<int>(ctx.cfg.get_int("verify.draws", 100));
  int candidates = static_cast<int>(ctx.cfg.get_int("verify.candidates", 1000));
  long long mc_draws = ctx.cfg.get_int("verify.mc_draws", 200000);
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("verify.seed", 1));
  if (n < 3) throw ConfigError("verify.n", "must be >= 3");

  std::vector<tl::theory::TheoremReport> reports;
  tl::rng::Counter zeta_rng(seed, "verify_zeta");
  reports.push_back(tl::theory::check_zeta_identity(n, draws, zeta_rng));

  tl::toy::OneHotConfig cfg = tl::toy::OneHotConfig::make(n);
  tl::data::WorldSpec world = tl::data::make_world(n, n, 7);
  tl::toy::StructuredCoeffs sharp{1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 0.5};  // gamma_bar = 0
  reports.push_back(tl::theory::sharpening_check(cfg, sharp, world, tl::theory::gamma_bar(sharp)));

  tl::toy::StructuredCoeffs sep{1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.0};  // symmetric, gamma_bar = 0
  reports.push_back(tl::theory::separation_check(cfg, sep, world));

  tl::rng::Counter mid_rng(seed, "verify_midpoint");
  reports.push_back(tl::theory::check_midpoint_witness(n, draws, candidates, mid_rng));

  tl::rng::Counter ent_rng(seed, "verify_entropy");
  reports.push_back(tl::theory::check_entropy_gap(0.5, 2, mc_draws, ent_rng));

  reports.push_back(tl::theory::check_kq_weights(5.0, 1000.0, 0.01));

  bool all_pass = true;
  json out = json::array();
  for (const tl::theory::TheoremReport& r : reports) {
    all_pass = all_pass && r.pass;
    out.push_back(r.to_json());
    std::cout << (r.pass ? "[ PASS ] " : "[ FAIL ] ") << r.claim_id << "  bound=" << r.bound
              << "  empirical=" << r.empirical << "\n";
  }
  tl::io::write_json_file(ctx.path("verify_report.json"), json{{"claims", out}}, ctx.meta(seed));
  std::cout << (all_pass ? "all claims hold\n" : "verification FAILED\n");
  return all_pass ? 0 : 3;
}

int cmd_cooccur(const Context& ctx) {
  std::string input = ctx.cfg.require_string("cooccur.input");
  std::ifstream in(input);
  if (!in) throw ConfigError("cooccur.input", "cannot open " + input);
  tl::cooccur::Corpus corpus;
  tl::cooccur::CorpusStats stats;
  tl::cooccur::Chi2Result chi;
  try {
    corpus = tl::cooccur::read_corpus_jsonl(in);
    stats = tl::cooccur::corpus_stats(corpus);
    chi = tl::cooccur::chi2_independence(corpus);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("cooccur.input", e.what());
  }
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("cooccur.seed", 0));
  tl::io::write_json_file(ctx.path("cooccur.json"), tl::cooccur::report_json(stats, chi), ctx.meta(seed));
  std::cout << "wrote " << ctx.path("cooccur.json") << "\n";
  return 0;
}

int cmd_export(const Context& ctx) {
  std::string ck_path = ctx.cfg.require_string("export.checkpoint");
  tl::ckpt::Checkpoint ck = tl::ckpt::read_checkpoint(ck_path);
  std::uint64_t seed = static_cast<std::uint64_t>(ctx.cfg.get_int("export.seed", 1));
  tl::io::OutputMeta meta = ctx.meta(seed);

  if (ck.meta.contains("model")) {
    tl::dense::DenseParams params = tl::ckpt::unpack_dense(ck);
    if (!ck.meta.contains("world")) throw ConfigError("export.checkpoint", "checkpoint lacks world metadata");
    tl::data::WorldSpec world = tl::data::world_from_json(ck.meta["world"]);
    int k = static_cast<int>(ctx.cfg.get_int("export.k", 16));
    if (k < 1 || k > world.n_subjects) throw ConfigError("export.k", "must lie in [1, n_subjects]");
    std::vector<la::Mat> kernels = tl::dense::vo_kernel(params);
    json summary;
    for (std::size_t l = 0; l < kernels.size(); ++l) {
      std::string base = "vo_kernel_l" + std::to_string(l) + ".csv";
      tl::io::write_matrix_csv(ctx.path(base), kernels[l], meta,
                               json{{"layer", l}, {"kind", "vo_kernel"}});
      tl::dense::KernelView view = tl::dense::vo_kernel_subsample(kernels[l], world, k);
      tl::dense::DiagonalStats st = tl::dense::diagonal_stats(
          [&] {  // lower-left block: attribute rows against subject columns
            la::Mat block(k, k);
            for (int i = 0; i < k; ++i)
              for (int j = 0; j < k; ++j) block(i, j) = view.block(k + i, j);
            return block;
          }());
      tl::io::write_matrix_csv(ctx.path("kernel_view_l" + std::to_string(l) + ".csv"), view.block, meta,
                               json{{"layer", l}, {"kind", "kernel_view"}, {"subjects", view.subjects}});
      summary["layer" + std::to_string(l)] =
          json{{"mean_diag", st.mean_diag}, {"mean_off", st.mean_off}, {"std_off", st.std_off},
               {"zscore", st.zscore}};
    }

    long long n_samples = ctx.cfg.get_int("export.attention_samples", 64);
    if (n_samples < 2 || n_samples % 2 != 0) throw ConfigError("export.attention_samples", "must be even and >= 2");
    tl::rng::Counter rng(seed, "export_attention");
    tl::data::Batch batch = tl::data::make_balanced_probe_set(world, static_cast<int>(n_samples), rng);
    std::vector<int> tokens = tl::dense::batch_to_tokens(batch);
    tl::dense::DenseCache cache;
    tl::dense::dense_forward(params, tokens, cache);
    tl::io::CsvWriter attn(ctx.path("attention.csv"), meta);
    attn.header({"sample", "truth", "layer", "query_pos", "w0", "w1", "w2", "w3"});
    for (int s = 0; s < cache.batch; ++s)
      for (int l = 0; l < params.cfg.n_layers; ++l)
        for (int qp = 0; qp < params.cfg.seq_len; ++qp) {
          const double* w = cache.layers[static_cast<std::size_t>(l)].attn.row(s * params.cfg.seq_len + qp);
          attn.row({tl::io::fmt(s), batch.examples[static_cast<std::size_t>(s)].truth ? "1" : "0",
                    tl::io::fmt(l), tl::io::fmt(qp), tl::io::fmt(w[0]), tl::io::fmt(w[1]),
                    tl::io::fmt(w[2]), tl::io::fmt(w[3])});
        }
    tl::io::write_json_file(ctx.path("export_summary.json"), json{{"kernel_diagonal", summary}}, meta);
    std::cout << "wrote kernel, attention, and summary files to " << ctx.out_dir << "\n";
    return 0;
  }

  // Toy value-matrix checkpoint.
  la::Mat w = tl::ckpt::unpack_matrix(ck, "W");
  tl::io::write_matrix_csv(ctx.path("W.csv"), w, meta, json{{"kind", "toy_value_matrix"}});
  if (ck.meta.contains("world") && ck.meta.contains("toy")) {
    tl::data::WorldSpec world = tl::data::world_from_json(ck.meta["world"]);
    tl::toy::OneHotConfig mc = tl::toy::OneHotConfig::make(ck.meta["toy"]["N"].get<int>());
    mc.include_positions = ck.meta["toy"].value("include_positions", true);
    tl::toy::StructuredFit fit = tl::toy::fit_structured(mc, w, world);
    json fj{{"alpha1", fit.coeffs.alpha1}, {"alpha2", fit.coeffs.alpha2}, {"beta1", fit.coeffs.beta1},
            {"beta2", fit.coeffs.beta2},   {"gamma1", fit.coeffs.gamma1}, {"gamma2", fit.coeffs.gamma2},
            {"gamma3", fit.coeffs.gamma3}, {"residual", fit.residual},
            {"off_structure_max", fit.off_structure_max}, {"positive", fit.positive}};
    tl::io::write_json_file(ctx.path("structured_fit.json"), json{{"fit", fj}}, meta);
  }
  std::cout << "wrote W matrix export to " << ctx.out_dir << "\n";
  return 0;
}

void emit_error(const std::string& field, const std::string& message) {
  std::cerr << tl::io::error_json(field, message).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for linear truth encoding in toy transformers"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* desc;
    int (*fn)(const Context&);
    bool config_required;
  };
  const SubSpec subs[] = {
      {"generate", "sample a synthetic batch and write it as CSV", cmd_generate, true},
      {"train-toy", "SGD on the one-hot toy model; trace structured-fit coefficients", cmd_train_toy, true},
      {"train-dense", "train the dense attention-only model; trace phase metrics", cmd_train_dense, true},
      {"probe", "fit truth probes and PCA on a dense checkpoint", cmd_probe, true},
      {"verify", "run the closed-form claim suite; exit 0 iff all claims hold", cmd_verify, false},
      {"cooccur", "co-occurrence statistics over a JSONL corpus", cmd_cooccur, true},
      {"export", "dump kernels, attention maps, or the toy value matrix from a checkpoint", cmd_export, true},
  };

  struct SubState {
    CLI::App* app;
    std::string config_path;
    std::string out_dir = ".";
    int (*fn)(const Context&);
  };
  std::vector<SubState> states;
  states.reserve(std::size(subs));
  for (const SubSpec& spec : subs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.desc);
    states.push_back({sub, "", ".", spec.fn});
    SubState& st = states.back();
    CLI::Option* copt = sub->add_option("--config", st.config_path, "experiment config file");
    if (spec.config_required) copt->required();
    sub->add_option("--out", st.out_dir, "output directory (default .)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("argv", e.what());
    return 2;
  }

  for (SubState& st : states) {
    if (!st.app->parsed()) continue;
    try {
      Context ctx = make_context(st.config_path, st.out_dir);
      return st.fn(ctx);
    } catch (const ConfigError& e) {
      emit_error(e.field, e.what());
      return 2;
    } catch (const std::exception& e) {
      emit_error("", e.what());
      return 1;
    }
  }
  emit_error("argv", "no subcommand selected");
  return 2;
}
