#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "treejudge/core/document.hpp"
#include "treejudge/metrics/metrics.hpp"

namespace treejudge::metrics {

inline constexpr const char* kReportSchema = "treejudge.metrics-report/1";
inline constexpr const char* kAbsentMark = "—";  // rendered for cells with no result

struct Provenance {
  std::string model;
  bool short_circuit = true;
  std::string generated_at;  // supplied by the caller so reports are reproducible
  std::string tool_version = "0.1.0";
};

struct MetricsReport {
  std::string agent;
  MeanStd partial_completion;
  MeanStd success_rate;
  int k = 3;
  Rational pass_at_k;
  ScoreMatrix matrix;
  Provenance provenance;
};

inline MetricsReport emit_report(const ScoreMatrix& m, int k, std::string agent, Provenance provenance) {
  MetricsReport r;
  r.agent = std::move(agent);
  r.partial_completion = partial_completion(m);
  r.success_rate = success_rate(m);
  r.k = k;
  r.pass_at_k = pass_at_k(m, k);
  r.matrix = m;
  r.provenance = std::move(provenance);
  return r;
}

namespace detail {

inline std::string fixed4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

inline Json mean_std_json(const MeanStd& s) {
  Json j;
  j["mean"] = to_exact_string(s.mean);
  j["mean_decimal"] = to_decimal(s.mean, 4);
  j["variance"] = to_exact_string(s.variance);
  j["std_decimal"] = fixed4(s.std_dev());
  Json runs = Json::array();
  for (const auto& v : s.per_run) runs.push_back(to_exact_string(v));
  j["per_run"] = std::move(runs);
  return j;
}

// Display width in code points, so the em dash pads like one column.
inline std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

inline std::string pad(const std::string& s, std::size_t width) {
  auto w = display_width(s);
  return w >= width ? s + " " : s + std::string(width - w, ' ');
}

}  // namespace detail

inline Json report_to_json(const MetricsReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["agent"] = r.agent;
  j["partial_completion"] = detail::mean_std_json(r.partial_completion);
  j["success_rate"] = detail::mean_std_json(r.success_rate);
  j["pass_at_k"] = {{"k", r.k}, {"value", to_exact_string(r.pass_at_k)}, {"decimal", to_decimal(r.pass_at_k, 4)}};
  Json rows = Json::array();
  for (std::size_t t = 0; t < r.matrix.task_count(); ++t) {
    Json scores = Json::array();
    for (std::size_t run = 0; run < r.matrix.runs(); ++run) {
      const auto& c = r.matrix.cell(t, run);
      scores.push_back(c ? Json(to_exact_string(*c)) : Json(nullptr));
    }
    rows.push_back({{"task", r.matrix.tasks()[t]}, {"scores", std::move(scores)}});
  }
  j["per_task"] = std::move(rows);
  j["absent_cells"] = r.matrix.absent_cells();
  j["provenance"] = {{"model", r.provenance.model},
                     {"short_circuit", r.provenance.short_circuit},
                     {"generated_at", r.provenance.generated_at},
                     {"tool_version", r.provenance.tool_version},
                     {"std", "population std over run-level aggregates"},
                     {"runs", r.matrix.runs()}};
  return j;
}

// Headline table (one row per agent) followed by per-task appendices.
inline std::string render_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  const std::size_t w0 = 24, w = 22;
  std::string pass_header = reports.empty() ? "Pass@k" : "Pass@" + std::to_string(reports.front().k);
  out << detail::pad("Agent", w0) << detail::pad("Partial Completion", w) << detail::pad("Success Rate", w)
      << pass_header << "\n";
  for (const auto& r : reports) {
    out << detail::pad(r.agent, w0)
        << detail::pad(to_decimal(r.partial_completion.mean, 4) + " ± " +
                           detail::fixed4(r.partial_completion.std_dev()), w)
        << detail::pad(to_decimal(r.success_rate.mean, 4) + " ± " + detail::fixed4(r.success_rate.std_dev()), w)
        << to_decimal(r.pass_at_k, 4) << "\n";
  }
  for (const auto& r : reports) {
    out << "\nPer-task root scores: " << r.agent << "\n";
    out << detail::pad("Task", w0);
    for (std::size_t run = 0; run < r.matrix.runs(); ++run) {
      out << detail::pad("Run " + std::to_string(run + 1), 10);
    }
    out << "\n";
    for (std::size_t t = 0; t < r.matrix.task_count(); ++t) {
      out << detail::pad(r.matrix.tasks()[t], w0);
      for (std::size_t run = 0; run < r.matrix.runs(); ++run) {
        const auto& c = r.matrix.cell(t, run);
        out << detail::pad(c ? to_decimal(*c, 4) : std::string(kAbsentMark), 10);
      }
      out << "\n";
    }
    if (auto absent = r.matrix.absent_cells(); absent > 0) {
      out << "* " << absent << " absent cell(s) excluded from means (evaluation failures)\n";
    }
  }
  return out.str();
}

inline std::string matrix_to_csv(const ScoreMatrix& m) {
  std::ostringstream out;
  out << "task";
  for (std::size_t r = 0; r < m.runs(); ++r) out << ",run_" << (r + 1);
  out << "\n";
  for (std::size_t t = 0; t < m.task_count(); ++t) {
    out << m.tasks()[t];
    for (std::size_t r = 0; r < m.runs(); ++r) {
      const auto& c = m.cell(t, r);
      out << "," << (c ? to_decimal(*c, 4) : std::string());
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace treejudge::metrics
