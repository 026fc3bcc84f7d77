#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/runner/results.hpp"

namespace protofsl {

enum class TableLayout { backbone_summary, detailed };

inline TableLayout parse_layout(const std::string& s) {
  if (s == "backbone_summary" || s == "summary") return TableLayout::backbone_summary;
  if (s == "detailed") return TableLayout::detailed;
  throw ValidationError("unknown table layout '" + s + "' (expected summary or detailed)");
}

struct RenderedTable {
  std::string text;
  std::vector<std::string> warnings;
};

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

inline std::string format_summary(const MetricsSummary& s) {
  return s.std ? format_percent(s.mean) + "±" + format_percent(*s.std) : format_percent(s.mean);
}

// Group key of the summary layout.
struct SummaryKey {
  Mode mode;
  DatasetView view;
  Backbone backbone;
  auto operator<=>(const SummaryKey&) const = default;
};

struct SummaryGroup {
  MetricsSummary accuracy, precision, recall, f1;  // over the per-cell means of the group
  std::size_t cells = 0;
};

// Successful rows grouped by (mode, view, backbone); each metric aggregated
// across the group's cells. Later rows for the same config hash replace
// earlier ones.
inline std::vector<ResultRow> latest_ok_rows(const std::vector<ResultRow>& rows) {
  std::map<std::string, ResultRow> by_hash;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    if (!by_hash.count(r.config_hash)) order.push_back(r.config_hash);
    by_hash[r.config_hash] = r;
  }
  std::vector<ResultRow> out;
  for (const auto& h : order) out.push_back(by_hash.at(h));
  return out;
}

inline std::map<SummaryKey, SummaryGroup> summary_groups(const std::vector<ResultRow>& rows) {
  std::map<SummaryKey, std::vector<const ResultRow*>> members;
  const auto ok = latest_ok_rows(rows);
  for (const auto& r : ok) members[{r.config.mode, r.config.view, r.config.backbone}].push_back(&r);
  std::map<SummaryKey, SummaryGroup> out;
  for (const auto& [key, list] : members) {
    std::vector<double> a, p, rc, f;
    for (const auto* r : list) {
      a.push_back(r->accuracy.mean);
      p.push_back(r->precision.mean);
      rc.push_back(r->recall.mean);
      f.push_back(r->f1.mean);
    }
    const bool with_std = list.size() >= 2;
    out[key] = {aggregate(a, with_std), aggregate(p, with_std), aggregate(rc, with_std), aggregate(f, with_std),
                list.size()};
  }
  return out;
}

namespace detail {

inline std::string pad(const std::string& s, std::size_t width) {
  // Width counts code points so "±" lines up.
  std::size_t cps = 0;
  for (unsigned char ch : s) cps += (ch & 0xC0) != 0x80;
  return s + std::string(width > cps ? width - cps : 0, ' ');
}

inline std::string render_grid(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> widths;
  for (const auto& row : cells) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::size_t cps = 0;
      for (unsigned char ch : row[i]) cps += (ch & 0xC0) != 0x80;
      widths[i] = std::max(widths[i], cps);
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out << "|";
    for (std::size_t i = 0; i < widths.size(); ++i) {
      out << " " << pad(i < cells[r].size() ? cells[r][i] : "", widths[i]) << " |";
    }
    out << "\n";
    if (r == 0) {
      out << "|";
      for (auto w : widths) out << std::string(w + 2, '-') << "|";
      out << "\n";
    }
  }
  return out.str();
}

inline std::string bold(const std::string& s) { return "**" + s + "**"; }

}  // namespace detail

// Markdown tables. backbone_summary: one line per (mode, view, backbone) with
// mean±std of each metric over the group's cells, best accuracy per view in
// bold. detailed: per (view, backbone) block, one line per (mode, ways-shots)
// and one column per budget; best value per column within the block in bold.
inline RenderedTable render_table(const std::vector<ResultRow>& rows, TableLayout layout) {
  RenderedTable t;
  for (const auto& r : rows) {
    if (!r.ok) t.warnings.push_back("skipping failed cell " + r.config_hash + ": " + r.failure_reason);
  }
  const auto ok = latest_ok_rows(rows);
  if (ok.empty()) {
    t.warnings.push_back("no successful rows to render");
    return t;
  }
  if (layout == TableLayout::backbone_summary) {
    const auto groups = summary_groups(rows);
    std::map<std::pair<Mode, DatasetView>, double> best;
    for (const auto& [k, g] : groups) {
      auto [it, fresh] = best.try_emplace({k.mode, k.view}, g.accuracy.mean);
      if (!fresh) it->second = std::max(it->second, g.accuracy.mean);
    }
    std::vector<std::vector<std::string>> cells{
        {"Mode", "View", "Backbone", "Cells", "Accuracy", "Precision", "Recall", "F1-Score"}};
    for (const auto& [k, g] : groups) {
      std::string acc = format_summary(g.accuracy);
      if (groups.size() > 1 && g.accuracy.mean == best.at({k.mode, k.view})) acc = detail::bold(acc);
      cells.push_back({to_string(k.mode), to_string(k.view), to_string(k.backbone), std::to_string(g.cells), acc,
                       format_summary(g.precision), format_summary(g.recall), format_summary(g.f1)});
    }
    t.text = detail::render_grid(cells);
    return t;
  }

  // detailed
  std::set<double, std::greater<>> budgets;
  std::map<std::pair<DatasetView, Backbone>, std::map<std::tuple<Mode, std::size_t, std::size_t>, std::map<double, double>>>
      blocks;
  for (const auto& r : ok) {
    budgets.insert(r.config.budget_fraction);
    blocks[{r.config.view, r.config.backbone}][{r.config.mode, r.config.n_way, r.config.k_shot}][r.config.budget_fraction] =
        r.accuracy.mean;
  }
  auto budget_label = [](double b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g%%", 100.0 * b);
    return std::string(buf);
  };
  std::vector<std::string> header{"View", "Backbone", "Mode", "Ways-Shots"};
  for (double b : budgets) header.push_back(budget_label(b));
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& [bk, lines] : blocks) {
    std::map<double, double> col_best;
    for (const auto& [lk, vals] : lines) {
      for (const auto& [b, v] : vals) {
        auto [it, fresh] = col_best.try_emplace(b, v);
        if (!fresh) it->second = std::max(it->second, v);
      }
    }
    for (const auto& [lk, vals] : lines) {
      const auto& [mode, n_way, k_shot] = lk;
      std::vector<std::string> line{to_string(bk.first), to_string(bk.second), to_string(mode),
                                    std::to_string(n_way) + "-" + std::to_string(k_shot)};
      for (double b : budgets) {
        auto it = vals.find(b);
        if (it == vals.end()) {
          line.push_back("--");
          t.warnings.push_back("missing cell: " + to_string(bk.first) + " " + to_string(bk.second) + " " +
                               to_string(mode) + " " + std::to_string(n_way) + "-" + std::to_string(k_shot) +
                               " budget " + budget_label(b));
          continue;
        }
        std::string s = format_percent(it->second);
        if (lines.size() > 1 && it->second == col_best.at(b)) s = detail::bold(s);
        line.push_back(s);
      }
      cells.push_back(line);
    }
  }
  t.text = detail::render_grid(cells);
  return t;
}

}  // namespace protofsl
