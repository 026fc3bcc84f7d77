// End-to-end run on a synthetic corpus: patches, split, budget, episodic
// training of the tiny encoder, evaluation on test-split episodes.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "protofsl/protofsl.hpp"

int main(int argc, char** argv) {
  using namespace protofsl;
  tune_allocator();
  const std::size_t iterations = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;

  SyntheticOptions opt;
  opt.images_per_class = 10;
  opt.separability = 1.0;
  opt.seed = 7;
  const auto images = gen_synthetic_dataset(opt);
  const DatasetManifest manifest = prepare_view(images, 100, kPatchSize, 0.8, 7);
  const PatchSource source(manifest);

  const BudgetedDataset train = apply_budget(manifest, 1.0, 11);
  EpisodeSpec spec;  // 6-way 10-shot, 10 queries
  spec.seed = 3;

  auto t0 = std::chrono::steady_clock::now();
  auto state = TrainState<float>::start(Encoder<float>::create(Backbone::tiny_test_cnn, 1), 1e-3, iterations);
  state = train_episodic(std::move(state), episode_stream(train, spec, iterations), source, iterations);
  auto t1 = std::chrono::steady_clock::now();

  const EpisodeStream test(test_pool(manifest, 5), spec, 20);
  const auto report = summarize(evaluate(state.encoder, test, source));
  std::printf("first loss %.4f  last loss %.4f  train %.1fs\n", state.loss_history.front(), state.loss_history.back(),
              std::chrono::duration<double>(t1 - t0).count());
  std::printf("test accuracy %.4f +- %.4f over %zu episodes\n", report.accuracy.mean, report.accuracy.std.value_or(0.0),
              report.accuracy.n);
  return 0;
}
