// Acceptance checks A1-A10. One PASS/FAIL line per check; exit status is the
// number of failures (capped at 1).
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace protofsl;
using testing_support::Gen;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates the first few failure reasons of a check.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 3) reasons_ << (failures_ > 1 ? "; " : "") << what;
  }
  Outcome done(std::string detail) const {
    if (failures_ == 0) return {true, std::move(detail)};
    return {false, std::to_string(failures_) + " violation(s): " + reasons_.str() + " | " + detail};
  }

 private:
  std::size_t failures_ = 0;
  std::ostringstream reasons_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- A1

Outcome a1() {
  const std::vector<double> sur{86.70, 86.77, 85.62, 84.85, 89.92, 87.98, 83.77, 88.77,
                                88.33, 82.75, 88.37, 88.08, 88.33, 85.67, 82.65, 87.88};
  const std::vector<double> sec{91.13, 94.02, 90.78, 91.42, 93.70, 96.07, 95.12, 89.92,
                                92.87, 94.62, 90.93, 95.22, 92.43, 93.23, 93.93, 90.32};
  const std::vector<double> mix{84.57, 86.15, 84.82, 88.33, 87.17, 89.63, 87.42, 90.17,
                                89.68, 86.90, 90.52, 88.40, 88.90, 87.47, 88.75, 88.77};
  const auto s = aggregate(sur), e = aggregate(sec), m = aggregate(mix);
  Verdict v;
  v.expect(std::abs(s.mean - 86.65) <= 0.005, "SUR mean " + fmt("%.4f", s.mean));
  v.expect(std::abs(e.mean - 92.86) <= 0.005, "SEC mean " + fmt("%.4f", e.mean));
  v.expect(std::abs(m.mean - 87.98) <= 0.005, "MIX mean " + fmt("%.4f", m.mean));
  v.expect(std::abs(*s.std - 2.22) <= 0.01, "SUR std " + fmt("%.4f", *s.std));
  return v.done("SUR " + fmt("%.4f", s.mean) + "±" + fmt("%.4f", *s.std) + ", SEC " + fmt("%.4f", e.mean) + ", MIX " +
                fmt("%.4f", m.mean));
}

// ---------------------------------------------------------------- A2

Outcome a2() {
  Gen gen(2002);
  Verdict v;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = gen.size(2, 6), k = gen.size(1, 20), d = gen.size(1, 16), q = gen.size(1, 10);
    std::vector<std::vector<double>> support(n * k, std::vector<double>(d)), query(q, std::vector<double>(d));
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < n; ++c) labels.insert(labels.end(), k, c);
    gen.rng().shuffle(labels);
    // Coarse grid values make exact distance ties (and the argmax tie rule) show up.
    const bool coarse = gen.coin();
    auto draw = [&] { return coarse ? static_cast<double>(gen.size(0, 4)) : gen.normal(); };
    for (auto& row : support)
      for (auto& x : row) x = draw();
    for (auto& row : query)
      for (auto& x : row) x = draw();

    // Brute-force prototypes.
    std::vector<std::vector<double>> proto(n, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(n, 0);
    for (std::size_t i = 0; i < support.size(); ++i) {
      ++count[labels[i]];
      for (std::size_t j = 0; j < d; ++j) proto[labels[i]][j] += support[i][j];
    }
    for (std::size_t c = 0; c < n; ++c)
      for (auto& x : proto[c]) x /= static_cast<double>(count[c]);

    Matrix<double> s(static_cast<Eigen::Index>(n * k), static_cast<Eigen::Index>(d)),
        qm(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n * k; ++i)
      for (std::size_t j = 0; j < d; ++j) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = support[i][j];
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < d; ++j) qm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = query[i][j];
    const auto p = compute_prototypes(EmbeddingBatch<double>{s, labels}, n);
    const auto r = classify_queries(EmbeddingBatch<double>{qm, {}}, p);

    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = std::abs(p.prototypes(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) - proto[c][j]);
        worst = std::max(worst, diff);
        v.expect(diff <= 1e-6, "prototype mismatch");
      }
    // Exhaustive distances and a max-shifted softmax.
    for (std::size_t i = 0; i < q; ++i) {
      std::vector<double> logit(n);
      for (std::size_t c = 0; c < n; ++c) {
        double dist = 0;
        for (std::size_t j = 0; j < d; ++j) dist += (query[i][j] - proto[c][j]) * (query[i][j] - proto[c][j]);
        logit[c] = -dist;
      }
      const double mx = *std::max_element(logit.begin(), logit.end());
      double z = 0;
      for (double l : logit) z += std::exp(l - mx);
      std::size_t arg = 0;
      for (std::size_t c = 1; c < n; ++c)
        if (logit[c] > logit[arg]) arg = c;
      v.expect(r.predictions[i] == arg, "argmax mismatch");
      for (std::size_t c = 0; c < n; ++c) {
        const auto ii = static_cast<Eigen::Index>(i), cc = static_cast<Eigen::Index>(c);
        const double dl = std::abs(r.logits(ii, cc) - logit[c]);
        const double dp = std::abs(r.probabilities(ii, cc) - std::exp(logit[c] - mx) / z);
        worst = std::max({worst, dl, dp});
        v.expect(dl <= 1e-6 && dp <= 1e-6, "logit/probability mismatch");
      }
    }
  }
  return v.done("200 instances, max abs diff " + fmt("%.2e", worst));
}

// ---------------------------------------------------------------- A3

Outcome a3() {
  auto enc = Encoder<float>::create(Backbone::tiny_test_cnn, 1);
  Episode ep;
  ep.classes = {StoneClass::WW, StoneClass::WD, StoneClass::UA};
  for (std::size_t k = 0; k < 3; ++k)
    for (int s = 0; s < 2; ++s) ep.support.push_back({"s" + std::to_string(k) + std::to_string(s), k});
  for (std::size_t k = 0; k < 3; ++k) ep.query.push_back({"q" + std::to_string(k), k});
  Rng rng(101);
  Tensor<float> x({9, 3, 16, 16});
  for (auto& e : x.values()) e = static_cast<float>(rng.normal());
  episode_gradients(enc, x, ep);
  auto loss = [&] { return episode_loss_train_mode(enc, x, ep); };
  Verdict v;
  double worst = 0;
  std::size_t checked = 0;
  std::string worst_name;
  enc.network().visit("", nn::ParamVisitor<float>([&](const std::string& name, nn::Parameter<float>& p) {
                        if (!p.trainable) return;
                        double d2 = 0, a2 = 0, f2 = 0;
                        for (std::size_t i = 0; i < p.value.size(); ++i, ++checked) {
                          const double fd = testing_support::central_difference(p.value.data(), i, 1e-3, loss);
                          const double a = p.grad[i];
                          d2 += (a - fd) * (a - fd);
                          a2 += a * a;
                          f2 += fd * fd;
                        }
                        const double rel = std::sqrt(d2) / std::max({std::sqrt(a2), std::sqrt(f2), 1e-12});
                        if (rel > worst) worst = rel, worst_name = name;
                        v.expect(rel < 1e-3, name + " relative error " + fmt("%.2e", rel));
                      }));
  v.expect(checked == 3920, "parameter count " + std::to_string(checked));
  return v.done(std::to_string(checked) + " parameters, worst tensor " + worst_name + " " + fmt("%.2e", worst));
}

// ---------------------------------------------------------------- A4

Outcome a4() {
  Gen gen(4004);
  Verdict v;
  std::size_t patches_total = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<PatchRecord> patches;
    const std::size_t n_classes = gen.size(1, 6);
    for (std::size_t c = 0; c < n_classes; ++c) {
      const std::size_t images = gen.size(2, 12);
      for (std::size_t i = 0; i < images; ++i) {
        const std::string img = to_string(kAllClasses[c]) + "/img" + std::to_string(i);
        const std::size_t m = gen.size(1, 15);
        for (std::size_t p = 0; p < m; ++p) {
          PatchRecord r;
          r.patch_id = img + "#" + std::to_string(p);
          r.source_image_id = img;
          r.class_key = kAllClasses[c];
          patches.push_back(r);
        }
      }
    }
    patches_total += patches.size();
    const double f = gen.real(0.05, 0.95);
    const auto split = split_by_image(patches, f, gen.rng().next());
    std::map<std::string, std::set<Split>> sides;
    for (const auto& p : patches) sides[p.source_image_id].insert(split.by_patch.at(p.patch_id));
    for (const auto& [img, s] : sides) v.expect(s.size() == 1, "image " + img + " on both sides");
    for (std::size_t c = 0; c < n_classes; ++c) {
      std::map<std::string, std::size_t> mass;
      std::size_t total = 0, train = 0;
      for (const auto& p : patches) {
        if (p.class_key != kAllClasses[c]) continue;
        ++mass[p.source_image_id];
        ++total;
        train += split.by_patch.at(p.patch_id) == Split::train;
      }
      std::size_t biggest = 0;
      for (const auto& [_, m] : mass) biggest = std::max(biggest, m);
      v.expect(std::abs(static_cast<double>(train) - f * static_cast<double>(total)) <= static_cast<double>(biggest) + 1e-9,
               "train mass off target by more than one image");
      v.expect(train > 0 && train < total, "empty side");
    }
  }
  return v.done("1000 trials, " + std::to_string(patches_total) + " patches");
}

// ---------------------------------------------------------------- A5

Outcome a5() {
  Gen gen(5005);
  Verdict v;
  EpisodePool pool;
  pool.seed = 77;
  for (auto cls : kAllClasses)
    for (std::size_t i = 0; i < 40; ++i) pool.by_class[cls].push_back(to_string(cls) + "#" + std::to_string(i));
  for (std::size_t index = 0; index < 1000; ++index) {
    const EpisodeSpec spec{gen.size(2, 6), gen.size(1, 15), gen.size(1, 15), gen.rng().next()};
    const Episode ep = sample_episode(pool, spec, index);
    v.expect(ep.classes.size() == spec.n_way &&
                 std::set<StoneClass>(ep.classes.begin(), ep.classes.end()).size() == spec.n_way,
             "class count");
    std::vector<std::size_t> s(spec.n_way, 0), q(spec.n_way, 0);
    std::set<std::string> ids;
    bool member = true;
    auto in_class = [&](const EpisodeItem& it) {
      const auto& m = pool.by_class.at(ep.classes.at(it.label));
      return std::find(m.begin(), m.end(), it.patch_id) != m.end();
    };
    for (const auto& it : ep.support) ++s.at(it.label), ids.insert(it.patch_id), member &= in_class(it);
    for (const auto& it : ep.query) ++q.at(it.label), ids.insert(it.patch_id), member &= in_class(it);
    v.expect(member, "patch from the wrong class");
    v.expect(ids.size() == ep.support.size() + ep.query.size(), "support/query overlap");
    for (std::size_t k = 0; k < spec.n_way; ++k) v.expect(s[k] == spec.k_shot && q[k] == spec.n_query, "per-class counts");
    v.expect(sample_episode(pool, spec, index) == ep, "not reproducible");
  }
  return v.done("1000 episodes");
}

// ---------------------------------------------------------------- A6

Outcome a6() {
  // 6000 balanced train patches plus a held-out test split that must stay untouched.
  auto records = testing_support::make_patches(6, 12, 100, 1, 6);
  std::map<std::string, Split> split;
  for (const auto& r : records) {
    const std::size_t img = std::stoul(r.source_image_id.substr(r.source_image_id.rfind("img") + 3));
    split[r.patch_id] = img < 10 ? Split::train : Split::test;
  }
  const auto m = make_manifest(std::move(records), DatasetView::SUR, split, 0);
  Verdict v;
  v.expect(m.ids_in(Split::train).size() == 6000, "train split is not 6000");
  const auto b = apply_budget(m, 0.25, 606);
  const auto ids = b.selected_patch_ids();
  v.expect(ids.size() == 1500, "selected " + std::to_string(ids.size()));
  for (const auto& [cls, list] : b.pool.by_class) v.expect(list.size() == 250, to_string(cls) + " has " + std::to_string(list.size()));
  for (const auto& id : ids) v.expect(m.split.at(id) == Split::train, "test patch selected");
  return v.done(std::to_string(ids.size()) + " of " + std::to_string(m.ids_in(Split::train).size()) + " train patches (" +
                std::to_string(m.records.size()) + " total)");
}

// ---------------------------------------------------------------- A7, A10

constexpr std::size_t kA7Iterations = 400;
constexpr std::size_t kA7PatchSide = 64;

struct SeparableRun {
  double accuracy = 0;
  std::vector<double> loss_history;
  std::vector<EpisodeMetrics> episodes;
};

const SeparableRun& separable_run() {
  static const SeparableRun run = [] {
    const auto m = testing_support::synthetic_manifest(1.0, 10, 150, 707, 6, kA7PatchSide);
    const PatchSource source(m);
    const auto data = apply_budget(m, 1.0, 1);
    auto state = TrainState<float>::start(Encoder<float>::create(Backbone::tiny_test_cnn, 7), 1e-3, kA7Iterations);
    state = train_episodic(std::move(state), episode_stream(data, EpisodeSpec{6, 10, 10, 71}, kA7Iterations), source,
                           kA7Iterations);
    SeparableRun r;
    r.loss_history = state.loss_history;
    r.episodes = evaluate(state.encoder, EpisodeStream(test_pool(m, 72), EpisodeSpec{6, 10, 10, 73}, 100), source);
    r.accuracy = summarize(r.episodes).accuracy.mean;
    return r;
  }();
  return run;
}

Outcome a7() {
  const auto& run = separable_run();
  const auto chance_m = testing_support::synthetic_manifest(0.0, 10, 150, 708, 6, kA7PatchSide);
  const PatchSource source(chance_m);
  const auto enc = Encoder<float>::create(Backbone::tiny_test_cnn, 8);
  const auto eps = evaluate(enc, EpisodeStream(test_pool(chance_m, 74), EpisodeSpec{6, 10, 10, 75}, 100), source);
  const double chance = summarize(eps).accuracy.mean;
  Verdict v;
  v.expect(run.accuracy >= 0.90, "trained accuracy " + fmt("%.4f", run.accuracy));
  v.expect(std::abs(chance - 1.0 / 6.0) <= 0.05, "untrained accuracy " + fmt("%.4f", chance));
  return v.done("trained " + fmt("%.4f", run.accuracy) + " after " + std::to_string(kA7Iterations) +
                " iterations, untrained on separability 0 " + fmt("%.4f", chance));
}

Outcome a10() {
  Verdict v;
  const Matrix<double> uniform = Matrix<double>::Constant(60, 6, -2.5);
  std::vector<std::size_t> labels;
  for (std::size_t k = 0; k < 6; ++k) labels.insert(labels.end(), 10, k);
  const double l = episode_loss(uniform, labels);
  v.expect(std::abs(l - 1.791759) <= 1e-6, "uniform loss " + fmt("%.7f", l));
  const auto& h = separable_run().loss_history;
  v.expect(h.size() >= 40, "too few iterations");
  const double first = std::accumulate(h.begin(), h.begin() + 20, 0.0) / 20;
  const double last = std::accumulate(h.end() - 20, h.end(), 0.0) / 20;
  v.expect(last < first, "loss did not decrease");
  return v.done("uniform " + fmt("%.7f", l) + ", first-20 " + fmt("%.4f", first) + " -> last-20 " + fmt("%.4f", last));
}

// ---------------------------------------------------------------- A8

Outcome a8() {
  Verdict v;
  double worst = 0;
  std::size_t n_episodes = 0;
  for (const auto& e : separable_run().episodes) {
    worst = std::max(worst, std::abs(e.recall_macro - e.accuracy));
    ++n_episodes;
  }
  // Random predictions on balanced episodes of every shape.
  Gen gen(8008);
  for (int trial = 0; trial < 1000; ++trial, ++n_episodes) {
    const std::size_t n = gen.size(2, 6), q = gen.size(1, 20);
    std::vector<std::size_t> truth, pred;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < q; ++i) truth.push_back(k), pred.push_back(gen.size(0, n - 1));
    const auto m = episode_metrics(pred, truth, n);
    worst = std::max(worst, std::abs(m.recall_macro - m.accuracy));
  }
  v.expect(worst <= 1e-9, "recall differs from accuracy by " + fmt("%.2e", worst));
  return v.done(std::to_string(n_episodes) + " episodes, max |recall - accuracy| " + fmt("%.2e", worst));
}

// ---------------------------------------------------------------- A9

Outcome a9() {
  const auto m = testing_support::synthetic_manifest(1.0, 5, 40, 909, 6, 32);
  GridSpec grid;
  grid.views = {DatasetView::SUR};
  grid.backbones = {Backbone::tiny_test_cnn};
  grid.shots = {1, 3};
  grid.budgets = {1.0, 0.5, 0.25};
  grid.base.n_query = 2;
  grid.base.train_iterations = 2;
  grid.base.eval_episodes = 2;
  grid.base.learning_rate = 1e-3;
  grid.base.seed = 9;
  auto test_ids = m.ids_in(Split::test);
  std::sort(test_ids.begin(), test_ids.end());
  Verdict v;
  for (const auto& cell : grid.cells()) {
    auto baseline = cell;
    baseline.mode = Mode::baseline;
    baseline.baseline_epochs = 1;
    const auto p = execute_cell(cell, m);
    const auto b = execute_cell(baseline, m);
    v.expect(p.row.selection_hash == b.row.selection_hash, "selection hash differs for " + config_hash(cell));
    auto seen = b.baseline_report->evaluated_ids;
    std::sort(seen.begin(), seen.end());
    v.expect(seen == test_ids, "baseline evaluation does not cover each test patch exactly once");
  }
  return v.done(std::to_string(grid.size()) + " cells, " + std::to_string(test_ids.size()) + " test patches");
}

}  // namespace

int main() {
  tune_allocator();
  struct Check {
    const char* id;
    Outcome (*fn)();
    double budget_seconds;
  };
  const std::vector<Check> checks{{"A1", a1, 1},   {"A2", a2, 10},   {"A3", a3, 60},  {"A4", a4, 30},
                                  {"A5", a5, 30},  {"A6", a6, 5},    {"A7", a7, 600}, {"A8", a8, 600},
                                  {"A9", a9, 600}, {"A10", a10, 600}};
  int failed = 0;
  for (const auto& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += " | over the " + fmt("%.0f", c.budget_seconds) + " s budget";
    }
    failed += !o.pass;
    std::cout << c.id << " " << (o.pass ? "PASS" : "FAIL") << " (" << fmt("%.2f", secs) << " s) " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
