#pragma once

#include <chrono>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "protofsl/baseline/baseline.hpp"
#include "protofsl/core/error.hpp"
#include "protofsl/data/patch_source.hpp"
#include "protofsl/episodic/episodes.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/nn/checkpoint.hpp"
#include "protofsl/proto/episodic.hpp"
#include "protofsl/runner/config.hpp"
#include "protofsl/runner/results.hpp"

namespace protofsl {

using Logger = std::function<void(const std::string&)>;

struct RunOptions {
  std::filesystem::path checkpoint_dir;  // empty: do not save trained models
  Logger log;
  std::size_t log_every = 100;  // training iterations between progress lines
};

// Starting encoder of a cell: the configured weights, or a seeded random init.
inline Encoder<float> initial_encoder(const ExperimentConfig& c) {
  if (c.weights.empty()) return Encoder<float>::create(c.backbone, cell_seed(c));
  const CheckpointInfo info = read_checkpoint_info(c.weights);
  if (info.identity != c.backbone) {
    throw ValidationError("weights " + c.weights + " are for " + to_string(info.identity) + ", config asks for " +
                          to_string(c.backbone));
  }
  return load_encoder<float>(c.weights);
}

inline EpisodeSpec episode_spec(const ExperimentConfig& c, std::uint64_t salt) {
  return {c.n_way, c.k_shot, c.n_query, mix_seeds(cell_seed(c), salt)};
}

// Evaluation episodes of a cell, drawn from the test split only.
inline EpisodeStream evaluation_episodes(const ExperimentConfig& c, const DatasetManifest& manifest) {
  return EpisodeStream(test_pool(manifest, cell_seed(c)), episode_spec(c, fnv1a("eval")), c.eval_episodes);
}

struct CellOutcome {
  ResultRow row;
  std::optional<TrainState<float>> episodic;     // prototypical mode
  std::optional<Classifier<float>> classifier;   // baseline mode
  std::vector<EpisodeMetrics> episodes;          // prototypical evaluation detail
  std::optional<BaselineReport> baseline_report;
};

// Budget, train and evaluate one cell. Errors propagate; run_cell turns them
// into failed rows.
inline CellOutcome execute_cell(const ExperimentConfig& config, const DatasetManifest& manifest,
                                const RunOptions& options = {}) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  if (manifest.view != config.view) {
    throw ValidationError("manifest view " + to_string(manifest.view) + " does not match config view " +
                          to_string(config.view));
  }
  auto log = [&](const std::string& s) {
    if (options.log) options.log(s);
  };
  CellOutcome out;
  ResultRow& row = out.row;
  row.config = config;
  row.config_hash = config_hash(config);

  const BudgetedDataset budget = apply_budget(manifest, config.budget_fraction, budget_seed(config));
  row.selection_hash = budget.selection_hash();
  const PatchSource source(manifest);
  Encoder<float> encoder = initial_encoder(config);
  row.pretrained = encoder.pretrained();

  if (config.mode == Mode::prototypical) {
    const EpisodeStream train = EpisodeStream(budget.pool, episode_spec(config, fnv1a("train")), config.train_iterations);
    auto state = TrainState<float>::start(std::move(encoder), config.learning_rate, config.train_iterations);
    const std::size_t chunk = std::max<std::size_t>(1, options.log_every);
    for (std::size_t done = 0; done < config.train_iterations;) {
      const std::size_t n = std::min(chunk, config.train_iterations - done);
      // train_episodic consumes episodes from index 0; hand it the next window.
      std::vector<Episode> window;
      for (std::size_t i = 0; i < n; ++i) window.push_back(train[done + i]);
      state = train_episodic(std::move(state), window, source, n);
      done += n;
      log("step " + std::to_string(done) + "/" + std::to_string(config.train_iterations) + " loss " +
          std::to_string(state.loss_history.back()));
    }
    row.optimizer_steps = state.step;
    out.episodes = evaluate(state.encoder, evaluation_episodes(config, manifest), source);
    const MetricsReport m = summarize(out.episodes);
    row.accuracy = row_metric(m.accuracy);
    row.precision = row_metric(m.precision);
    row.recall = row_metric(m.recall);
    row.f1 = row_metric(m.f1);
    for (const auto& e : out.episodes) {
      for (const auto& r : e.confusion) {
        for (auto v : r) row.evaluated += v;
      }
    }
    if (!options.checkpoint_dir.empty()) {
      CheckpointInfo info;
      info.config_hash = row.config_hash;
      info.step = state.step;
      save_checkpoint(options.checkpoint_dir / row.config_hash, state.encoder, info);
    }
    out.episodic = std::move(state);
  } else {
    ClassifierConfig cc;
    cc.backbone = config.backbone;
    cc.n_classes = budget.pool.by_class.size();
    cc.learning_rate = config.learning_rate;
    cc.batch_size = config.batch_size;
    cc.seed = cell_seed(config);
    cc.epochs = config.baseline_epochs
                    ? config.baseline_epochs
                    : epochs_for_steps(budget.pool.size(), config.batch_size, config.train_iterations);
    log("baseline: " + std::to_string(cc.epochs) + " epochs over " + std::to_string(budget.pool.size()) + " patches");
    Classifier<float> model = train_baseline<float>(cc, budget, source, std::move(encoder));
    row.optimizer_steps = model.steps;
    row.baseline_epochs = cc.epochs;
    BaselineReport report = evaluate_baseline(model, manifest, source);
    row.accuracy = row_metric(report.metrics.accuracy);
    row.precision = row_metric(report.metrics.precision);
    row.recall = row_metric(report.metrics.recall);
    row.f1 = row_metric(report.metrics.f1);
    row.evaluated = report.evaluated_ids.size();
    if (!options.checkpoint_dir.empty()) save_classifier(options.checkpoint_dir / row.config_hash, model, row.config_hash);
    out.classifier = std::move(model);
    out.baseline_report = std::move(report);
  }
  row.ok = true;
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

// Never throws for cell-level problems: they come back as a failed row.
inline ResultRow run_cell(const ExperimentConfig& config, const DatasetManifest& manifest,
                          const RunOptions& options = {}) {
  const auto started = std::chrono::steady_clock::now();
  try {
    return execute_cell(config, manifest, options).row;
  } catch (const std::exception& e) {
    ResultRow row;
    row.config = config;
    row.config_hash = config_hash(config);
    row.ok = false;
    row.failure_reason = e.what();
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return row;
  }
}

using ManifestStore = std::map<DatasetView, DatasetManifest>;

struct GridControl {
  // Called before each cell that still has to run; returning false stops the
  // grid there (used to simulate interruption).
  std::function<bool(std::size_t cells_run)> keep_going;
};

// Runs every cell without an "ok" row in `results_path`, appending one row
// per cell as soon as it finishes. Returns the rows appended by this call.
inline std::vector<ResultRow> run_grid(const GridSpec& grid, const ManifestStore& store,
                                       const std::filesystem::path& results_path, const RunOptions& options = {},
                                       const GridControl& control = {}) {
  const auto cells = grid.cells();
  for (auto v : grid.views) {
    if (!store.count(v)) throw ValidationError("grid: no manifest for view " + to_string(v));
  }
  const auto existing = read_rows(results_path);
  std::set<std::string> done;
  std::map<std::string, std::size_t> attempts;
  for (const auto& r : existing) {
    ++attempts[r.config_hash];
    if (r.ok) done.insert(r.config_hash);
  }
  std::vector<ResultRow> appended;
  std::size_t ran = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    const std::string hash = config_hash(cell);
    if (done.count(hash)) continue;
    if (control.keep_going && !control.keep_going(ran)) break;
    if (options.log) {
      options.log("cell " + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + " " + to_string(cell.mode) +
                  " " + to_string(cell.view) + " " + to_string(cell.backbone) + " " + cell.shot_label() + " budget " +
                  std::to_string(cell.budget_fraction));
    }
    ResultRow row = run_cell(cell, store.at(cell.view), options);
    row.run_id = hash + "-" + std::to_string(attempts[hash]++);
    append_row(results_path, row);
    if (row.ok) done.insert(hash);
    if (options.log && !row.ok) options.log("cell failed: " + row.failure_reason);
    appended.push_back(std::move(row));
    ++ran;
  }
  return appended;
}

}  // namespace protofsl
