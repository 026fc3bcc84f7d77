#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protofsl/core/error.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/runner/config.hpp"

namespace protofsl {

struct RowMetric {
  double mean = 0.0;
  std::optional<double> std;  // across evaluation episodes; absent for single-pass evaluation
  std::size_t n = 0;

  bool operator==(const RowMetric&) const = default;
};

inline RowMetric row_metric(const MetricsSummary& s) { return {s.mean, s.std, s.n}; }

struct ResultRow {
  ExperimentConfig config;
  std::string config_hash;
  std::string run_id;  // config hash plus attempt number; unique within a results file
  bool ok = false;
  std::string failure_reason;
  RowMetric accuracy, precision, recall, f1;
  double wall_seconds = 0.0;
  std::string version = kVersion;
  std::string selection_hash;       // hash of the budgeted training patch ids
  std::size_t optimizer_steps = 0;
  std::size_t baseline_epochs = 0;  // epochs actually run (baseline mode)
  std::size_t evaluated = 0;        // query predictions (prototypical) or test patches (baseline)
  bool pretrained = false;

  bool operator==(const ResultRow&) const = default;
};

namespace detail {

inline nlohmann::json metric_json(const RowMetric& m) {
  nlohmann::json j = {{"mean", m.mean}, {"n", m.n}};
  j["std"] = m.std ? nlohmann::json(*m.std) : nlohmann::json(nullptr);
  return j;
}

inline RowMetric metric_from_json(const nlohmann::json& j) {
  RowMetric m;
  m.mean = j.at("mean").get<double>();
  m.n = j.at("n").get<std::size_t>();
  if (!j.at("std").is_null()) m.std = j.at("std").get<double>();
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const ResultRow& r) {
  return {{"config", to_json(r.config)},
          {"config_hash", r.config_hash},
          {"run_id", r.run_id},
          {"status", r.ok ? "ok" : "failed"},
          {"failure_reason", r.failure_reason},
          {"metrics",
           {{"accuracy", detail::metric_json(r.accuracy)},
            {"precision", detail::metric_json(r.precision)},
            {"recall", detail::metric_json(r.recall)},
            {"f1", detail::metric_json(r.f1)}}},
          {"wall_seconds", r.wall_seconds},
          {"version", r.version},
          {"selection_hash", r.selection_hash},
          {"optimizer_steps", r.optimizer_steps},
          {"baseline_epochs", r.baseline_epochs},
          {"evaluated", r.evaluated},
          {"pretrained", r.pretrained}};
}

inline ResultRow result_row_from_json(const nlohmann::json& j) {
  ResultRow r;
  r.config = experiment_config_from_json(j.at("config"));
  r.config_hash = j.at("config_hash").get<std::string>();
  r.run_id = j.at("run_id").get<std::string>();
  r.ok = j.at("status").get<std::string>() == "ok";
  r.failure_reason = j.at("failure_reason").get<std::string>();
  const auto& m = j.at("metrics");
  r.accuracy = detail::metric_from_json(m.at("accuracy"));
  r.precision = detail::metric_from_json(m.at("precision"));
  r.recall = detail::metric_from_json(m.at("recall"));
  r.f1 = detail::metric_from_json(m.at("f1"));
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.version = j.at("version").get<std::string>();
  r.selection_hash = j.at("selection_hash").get<std::string>();
  r.optimizer_steps = j.at("optimizer_steps").get<std::size_t>();
  r.baseline_epochs = j.at("baseline_epochs").get<std::size_t>();
  r.evaluated = j.at("evaluated").get<std::size_t>();
  r.pretrained = j.at("pretrained").get<bool>();
  return r;
}

// One JSON object per line, appended and flushed so a crash loses at most
// the row being written.
inline void append_row(const std::filesystem::path& path, const ResultRow& row) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw RuntimeFailure("cannot append to results file " + path.string());
  out << to_json(row).dump() << "\n";
  out.flush();
  if (!out) throw RuntimeFailure("write failed for results file " + path.string());
}

// A truncated last line (interrupted write) is skipped; any other malformed
// line is an error.
inline std::vector<ResultRow> read_rows(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  if (!std::filesystem::exists(path)) return rows;
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open results file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      rows.push_back(result_row_from_json(nlohmann::json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      if (i + 1 == lines.size()) break;
      throw RuntimeFailure(path.string() + ": line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

// Flat comma-separated summary, one line per row.
inline void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "run_id,config_hash,status,mode,view,backbone,n_way,k_shot,n_query,budget,seed,iterations,eval_episodes,"
         "learning_rate,accuracy,accuracy_std,precision,recall,f1,wall_seconds,selection_hash\n";
  out.precision(17);
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string{}; };
  for (const auto& r : rows) {
    const auto& c = r.config;
    out << r.run_id << ',' << r.config_hash << ',' << (r.ok ? "ok" : "failed") << ',' << to_string(c.mode) << ','
        << to_string(c.view) << ',' << to_string(c.backbone) << ',' << c.n_way << ',' << c.k_shot << ',' << c.n_query
        << ',' << c.budget_fraction << ',' << c.seed << ',' << c.train_iterations << ',' << c.eval_episodes << ','
        << c.learning_rate << ',' << r.accuracy.mean << ',' << opt(r.accuracy.std) << ',' << r.precision.mean << ','
        << r.recall.mean << ',' << r.f1.mean << ',' << r.wall_seconds << ',' << r.selection_hash << '\n';
  }
}

}  // namespace protofsl
