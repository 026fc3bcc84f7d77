// protofsl command line: data preparation, single runs, grids and reports.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "protofsl/data/image_io.hpp"
#include "protofsl/data/ingest.hpp"
#include "protofsl/protofsl.hpp"

namespace fs = std::filesystem;
using namespace protofsl;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path out_dir = "out";
  bool tiny = false;
  bool quiet = false;
};

void info(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "[protofsl] " << msg << "\n";
}

Logger logger(const Globals& g) {
  return [&g](const std::string& m) { info(g, m); };
}

// Flags shared by train, eval and grid; mirrors ExperimentConfig.
struct ConfigFlags {
  std::string view = "SUR";
  std::string backbone = "resnet34";
  std::string mode = "prototypical";
  ExperimentConfig cfg;

  void add(CLI::App* app, bool with_axes) {
    if (with_axes) {
      app->add_option("--view", view, "SUR, SEC or MIX")->capture_default_str();
      app->add_option("--backbone", backbone, "resnet18, resnet34, resnet50 or tiny_test_cnn")->capture_default_str();
      app->add_option("--k-shot", cfg.k_shot, "support examples per class")->capture_default_str();
      app->add_option("--budget", cfg.budget_fraction, "fraction of the train split, in (0, 1]")->capture_default_str();
    }
    app->add_option("--mode", mode, "prototypical or baseline")->capture_default_str();
    app->add_option("--n-way", cfg.n_way, "classes per episode")->capture_default_str();
    app->add_option("--n-query", cfg.n_query, "query examples per class")->capture_default_str();
    app->add_option("--iterations", cfg.train_iterations, "training episodes (baseline: target optimizer steps)")
        ->capture_default_str();
    app->add_option("--eval-episodes", cfg.eval_episodes, "evaluation episodes")->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "baseline mini-batch size")->capture_default_str();
    app->add_option("--epochs", cfg.baseline_epochs, "baseline epochs (0: match --iterations steps)")
        ->capture_default_str();
    app->add_option("--weights", cfg.weights, "checkpoint stem used to initialize the encoder");
  }

  ExperimentConfig resolve(const Globals& g) {
    ExperimentConfig c = cfg;
    c.view = parse_dataset_view(view);
    c.backbone = parse_backbone(backbone);
    c.mode = parse_mode(mode);
    c.seed = g.seed;
    if (g.tiny) apply_tiny(c);
    c.validate();
    return c;
  }

  static void apply_tiny(ExperimentConfig& c) {
    c.backbone = Backbone::tiny_test_cnn;
    c.weights.clear();
    c.train_iterations = std::min<std::size_t>(c.train_iterations, 100);
    c.eval_episodes = std::min<std::size_t>(c.eval_episodes, 20);
  }
};

fs::path data_dir(const Globals& g, const std::string& override_dir) {
  return override_dir.empty() ? g.out_dir / "data" : fs::path(override_dir);
}

DatasetManifest load_view(const fs::path& data, DatasetView view) {
  const fs::path dir = data / to_string(view);
  if (!fs::exists(dir / kManifestFile)) {
    throw ValidationError("no prepared " + to_string(view) + " data in " + dir.string() + " (run prepare first)");
  }
  return read_manifest(dir);
}

void print_metrics(const ResultRow& row) {
  nlohmann::json j = to_json(row);
  std::cout << j.dump(2) << "\n";
}

template <typename T>
std::vector<T> parse_list(const std::vector<std::string>& items, T (*parse)(const std::string&)) {
  std::vector<T> out;
  for (const auto& s : items) out.push_back(parse(s));
  return out;
}

DatasetManifest prepare_one(const Globals& g, const fs::path& input, View view, std::size_t quota,
                            std::size_t patch_size, double fraction) {
  IngestResult ingested = ingest_images(input, view, patch_size);
  for (const auto& w : ingested.warnings) info(g, "warning: " + w.path + ": " + w.reason);
  if (ingested.images.empty()) throw ValidationError("no usable " + to_string(view) + " images under " + input.string());
  info(g, "ingested " + std::to_string(ingested.images.size()) + " " + to_string(view) + " images");
  return prepare_view(ingested.images, quota, patch_size, fraction, g.seed);
}

void describe(const Globals& g, const DatasetManifest& m) {
  std::size_t train = 0;
  for (const auto& [_, s] : m.split) train += s == Split::train;
  info(g, to_string(m.view) + ": " + std::to_string(m.records.size()) + " patches, " + std::to_string(train) +
              " train, " + std::to_string(m.records.size() - train) + " test");
}

int run(int argc, char** argv) {
  Globals g;
  CLI::App app{"Few-shot prototypical classification of stone patches"};
  app.set_config("--config", "", "key = value config file (TOML/INI; subcommand keys go under [subcommand])");
  app.add_option("--seed", g.seed, "base seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_flag("--tiny", g.tiny, "tiny_test_cnn backbone, at most 100 iterations and 20 evaluation episodes");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress output");
  app.require_subcommand(1);
  app.fallthrough();

  // synth
  SyntheticOptions syn;
  std::string syn_views = "both";
  auto* synth = app.add_subcommand("synth", "write a synthetic image corpus as <out>/images/<view>/<class>/*.png");
  synth->add_option("--classes", syn.n_classes, "number of classes (2-6)")->capture_default_str();
  synth->add_option("--images-per-class", syn.images_per_class)->capture_default_str();
  synth->add_option("--image-size", syn.image_size)->capture_default_str();
  synth->add_option("--separability", syn.separability, "0 makes classes indistinguishable")->capture_default_str();
  synth->add_option("--views", syn_views, "SUR, SEC or both")->capture_default_str();

  // prepare
  std::string prep_input, prep_view = "SUR";
  std::size_t prep_quota = 1000, prep_patch = kPatchSize;
  double prep_fraction = 0.8;
  auto* prepare = app.add_subcommand("prepare", "ingest images, extract patches, split by image, write a manifest");
  prepare->add_option("--input", prep_input, "image root with <view>/<class>/ folders (default <out>/images)");
  prepare->add_option("--view", prep_view, "SUR, SEC or MIX")->capture_default_str();
  prepare->add_option("--quota", prep_quota, "patches per class")->capture_default_str();
  prepare->add_option("--patch-size", prep_patch)->capture_default_str();
  prepare->add_option("--train-fraction", prep_fraction)->capture_default_str();

  // train
  ConfigFlags train_flags;
  std::string train_data;
  auto* train = app.add_subcommand("train", "train and evaluate one configuration, append its result row");
  train_flags.add(train, true);
  train->add_option("--data", train_data, "prepared data directory (default <out>/data)");

  // eval
  ConfigFlags eval_flags;
  std::string eval_data, eval_ckpt;
  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on the test split");
  eval_flags.add(eval, true);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint stem (without .ckpt/.json)")->required();
  eval->add_option("--data", eval_data, "prepared data directory (default <out>/data)");

  // grid
  ConfigFlags grid_flags;
  std::string grid_data, grid_results;
  std::vector<std::string> grid_views{"SUR", "SEC", "MIX"}, grid_backbones{"resnet18", "resnet34", "resnet50"};
  std::vector<std::size_t> grid_shots{5, 10, 15, 20};
  std::vector<double> grid_budgets{1.0, 0.75, 0.5, 0.25};
  std::size_t grid_max_cells = 0;
  bool grid_save = false;
  auto* grid = app.add_subcommand("grid", "run the cartesian grid, resuming completed cells");
  grid_flags.add(grid, false);
  grid->add_option("--views", grid_views)->capture_default_str();
  grid->add_option("--backbones", grid_backbones)->capture_default_str();
  grid->add_option("--shots", grid_shots)->capture_default_str();
  grid->add_option("--budgets", grid_budgets)->capture_default_str();
  grid->add_option("--data", grid_data, "prepared data directory (default <out>/data)");
  grid->add_option("--results", grid_results, "results file (default <out>/results.jsonl)");
  grid->add_option("--max-cells", grid_max_cells, "stop after running this many cells (0: no limit)");
  grid->add_flag("--save-checkpoints", grid_save, "save each trained model under <out>/checkpoints");

  // report
  std::string rep_results, rep_layout = "summary", rep_csv;
  auto* report = app.add_subcommand("report", "render results as a table");
  report->add_option("--results", rep_results, "results file (default <out>/results.jsonl)");
  report->add_option("--layout", rep_layout, "summary or detailed")->capture_default_str();
  report->add_option("--csv", rep_csv, "also export a comma-separated summary");

  // project
  std::string proj_ckpt, proj_view = "SUR", proj_split = "test", proj_data, proj_output;
  bool proj_text = false;
  auto* project = app.add_subcommand("project", "dump embeddings of a split for external 2-D projection");
  project->add_option("--checkpoint", proj_ckpt, "checkpoint stem")->required();
  project->add_option("--view", proj_view)->capture_default_str();
  project->add_option("--split", proj_split, "test, train or all")->capture_default_str();
  project->add_option("--data", proj_data, "prepared data directory (default <out>/data)");
  project->add_option("--output", proj_output, "dump path (default <out>/embeddings-<view>.psemb)");
  project->add_flag("--text", proj_text, "also write a tab-separated copy next to the dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  tune_allocator();

  if (synth->parsed()) {
    std::vector<View> views;
    if (syn_views == "both") {
      views = {View::SUR, View::SEC};
    } else {
      views = {parse_view(syn_views)};
    }
    const fs::path root = g.out_dir / "images";
    for (View v : views) {
      SyntheticOptions o = syn;
      o.view = v;
      o.seed = mix_seeds(g.seed, fnv1a(to_string(v)));
      const auto images = gen_synthetic_dataset(o);
      for (const auto& img : images) {
        const fs::path path = root / img.image_id;
        fs::create_directories(path.parent_path());
        write_rgb(path, img.width, img.height, *img.pixels);
      }
      info(g, "wrote " + std::to_string(images.size()) + " " + to_string(v) + " images under " + root.string());
    }
    return 0;
  }

  if (prepare->parsed()) {
    const fs::path input = prep_input.empty() ? g.out_dir / "images" : fs::path(prep_input);
    const DatasetView view = parse_dataset_view(prep_view);
    DatasetManifest m;
    if (view == DatasetView::MIX) {
      const DatasetManifest sur = prepare_one(g, input, View::SUR, prep_quota, prep_patch, prep_fraction);
      const DatasetManifest sec = prepare_one(g, input, View::SEC, prep_quota, prep_patch, prep_fraction);
      m = build_view(sur, sec);
    } else {
      m = prepare_one(g, input, view == DatasetView::SUR ? View::SUR : View::SEC, prep_quota, prep_patch, prep_fraction);
    }
    const fs::path dir = g.out_dir / "data" / to_string(view);
    write_manifest(dir, m);
    describe(g, m);
    info(g, "manifest written to " + dir.string());
    return 0;
  }

  if (train->parsed()) {
    const ExperimentConfig cfg = train_flags.resolve(g);
    const DatasetManifest m = load_view(data_dir(g, train_data), cfg.view);
    RunOptions opt;
    opt.checkpoint_dir = g.out_dir / "checkpoints";
    opt.log = logger(g);
    ResultRow row = execute_cell(cfg, m, opt).row;
    const fs::path results = g.out_dir / "results.jsonl";
    std::size_t attempt = 0;
    for (const auto& r : read_rows(results)) attempt += r.config_hash == row.config_hash;
    row.run_id = row.config_hash + "-" + std::to_string(attempt);
    append_row(results, row);
    print_metrics(row);
    info(g, "checkpoint " + (opt.checkpoint_dir / row.config_hash).string() + ".{ckpt,json}");
    return 0;
  }

  if (eval->parsed()) {
    ExperimentConfig cfg = eval_flags.resolve(g);
    const CheckpointInfo ci = read_checkpoint_info(eval_ckpt);
    cfg.backbone = ci.identity;
    const DatasetManifest m = load_view(data_dir(g, eval_data), cfg.view);
    const PatchSource source(m);
    ResultRow row;
    row.config = cfg;
    row.config_hash = ci.config_hash;
    row.run_id = "eval";
    row.ok = true;
    row.pretrained = ci.pretrained;
    row.optimizer_steps = ci.step;
    if (ci.head_classes > 0) {
      row.config.mode = Mode::baseline;
      const auto model = load_classifier<float>(eval_ckpt);
      const auto r = evaluate_baseline(model, m, source);
      row.accuracy = row_metric(r.metrics.accuracy);
      row.precision = row_metric(r.metrics.precision);
      row.recall = row_metric(r.metrics.recall);
      row.f1 = row_metric(r.metrics.f1);
      row.evaluated = r.evaluated_ids.size();
    } else {
      row.config.mode = Mode::prototypical;
      const auto encoder = load_encoder<float>(eval_ckpt);
      const auto episodes = evaluate(encoder, evaluation_episodes(cfg, m), source);
      const auto s = summarize(episodes);
      row.accuracy = row_metric(s.accuracy);
      row.precision = row_metric(s.precision);
      row.recall = row_metric(s.recall);
      row.f1 = row_metric(s.f1);
      row.evaluated = episodes.size() * cfg.n_way * cfg.n_query;
    }
    print_metrics(row);
    return 0;
  }

  if (grid->parsed()) {
    GridSpec spec;
    spec.base = grid_flags.resolve(g);
    spec.views = parse_list<DatasetView>(grid_views, parse_dataset_view);
    spec.backbones = g.tiny ? std::vector<Backbone>{Backbone::tiny_test_cnn}
                            : parse_list<Backbone>(grid_backbones, parse_backbone);
    spec.shots = grid_shots;
    spec.budgets = grid_budgets;
    spec.validate();
    ManifestStore store;
    const fs::path data = data_dir(g, grid_data);
    for (auto v : spec.views) store.emplace(v, load_view(data, v));
    RunOptions opt;
    opt.log = logger(g);
    if (grid_save) opt.checkpoint_dir = g.out_dir / "checkpoints";
    GridControl control;
    if (grid_max_cells) control.keep_going = [&](std::size_t ran) { return ran < grid_max_cells; };
    const fs::path results = grid_results.empty() ? g.out_dir / "results.jsonl" : fs::path(grid_results);
    const auto rows = run_grid(spec, store, results, opt, control);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += !r.ok;
    info(g, std::to_string(rows.size()) + " cells run, " + std::to_string(failed) + " failed; " +
                std::to_string(spec.size()) + " cells in grid; results in " + results.string());
    return 0;
  }

  if (report->parsed()) {
    const fs::path results = rep_results.empty() ? g.out_dir / "results.jsonl" : fs::path(rep_results);
    if (!fs::exists(results)) throw ValidationError("results file " + results.string() + " does not exist");
    const auto rows = read_rows(results);
    const auto t = render_table(rows, parse_layout(rep_layout));
    for (const auto& w : t.warnings) info(g, "warning: " + w);
    std::cout << t.text;
    if (!rep_csv.empty()) write_csv(rep_csv, rows);
    return 0;
  }

  if (project->parsed()) {
    const DatasetView view = parse_dataset_view(proj_view);
    const DatasetManifest m = load_view(data_dir(g, proj_data), view);
    const CheckpointInfo ci = read_checkpoint_info(proj_ckpt);
    const auto encoder = load_encoder<float>(proj_ckpt);
    std::vector<std::string> ids;
    if (proj_split == "all") {
      for (const auto& r : m.records) ids.push_back(r.patch_id);
    } else if (proj_split == "test" || proj_split == "train") {
      ids = m.ids_in(proj_split == "test" ? Split::test : Split::train);
    } else {
      throw ValidationError("--split must be test, train or all");
    }
    const fs::path out = proj_output.empty() ? g.out_dir / ("embeddings-" + to_string(view) + ".psemb") : fs::path(proj_output);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const auto dump = export_embeddings(encoder, PatchSource(m), ids, view, ci.config_hash, out);
    if (proj_text) write_embedding_text(fs::path(out).replace_extension(".tsv"), dump);
    info(g, "wrote " + std::to_string(dump.rows) + " x " + std::to_string(dump.dim) + " embeddings to " + out.string());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
