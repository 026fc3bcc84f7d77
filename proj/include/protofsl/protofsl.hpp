#pragma once

// Umbrella header for the core library (no image codec dependency).
#include "protofsl/baseline/baseline.hpp"
#include "protofsl/core/alloc.hpp"
#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/core/tensor.hpp"
#include "protofsl/data/forge.hpp"
#include "protofsl/data/manifest_io.hpp"
#include "protofsl/data/patch_source.hpp"
#include "protofsl/data/synthetic.hpp"
#include "protofsl/data/types.hpp"
#include "protofsl/episodic/episodes.hpp"
#include "protofsl/metrics/embedding_dump.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/nn/adam.hpp"
#include "protofsl/nn/checkpoint.hpp"
#include "protofsl/nn/encoder.hpp"
#include "protofsl/nn/layers.hpp"
#include "protofsl/nn/resnet.hpp"
#include "protofsl/proto/episodic.hpp"
#include "protofsl/proto/prototypes.hpp"
#include "protofsl/runner/config.hpp"
#include "protofsl/runner/results.hpp"
#include "protofsl/runner/runner.hpp"
#include "protofsl/runner/table.hpp"
