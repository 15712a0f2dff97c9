#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "treejudge/core/error.hpp"
#include "treejudge/core/rational.hpp"

namespace treejudge::metrics {

// Tasks x runs grid of root scores. An absent cell is an evaluation
// failure and is never treated as a 0.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> tasks, std::size_t runs)
      : tasks_(std::move(tasks)), runs_(runs), cells_(tasks_.size() * runs) {}

  void set(std::size_t task, std::size_t run, Rational score) {
    if (score < 0 || score > 1) throw MetricsError("score outside [0,1]");
    cells_.at(offset(task, run)) = std::move(score);
  }
  void clear(std::size_t task, std::size_t run) { cells_.at(offset(task, run)).reset(); }

  const std::optional<Rational>& cell(std::size_t task, std::size_t run) const {
    return cells_.at(offset(task, run));
  }

  const std::vector<std::string>& tasks() const { return tasks_; }
  std::size_t task_count() const { return tasks_.size(); }
  std::size_t runs() const { return runs_; }

  std::size_t absent_cells() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c ? 0 : 1;
    return n;
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::size_t offset(std::size_t task, std::size_t run) const {
    if (task >= tasks_.size() || run >= runs_) throw MetricsError("cell index out of range");
    return task * runs_ + run;
  }

  std::vector<std::string> tasks_;
  std::size_t runs_ = 0;
  std::vector<std::optional<Rational>> cells_;
};

// Mean and population variance of run-level aggregates. The variance is
// exact; std() is its square root.
struct MeanStd {
  Rational mean;
  Rational variance;
  std::vector<Rational> per_run;

  double std_dev() const { return std::sqrt(to_double(variance)); }
};

namespace detail {

inline void require_computable(const ScoreMatrix& m) {
  if (m.task_count() == 0 || m.runs() == 0) throw MetricsError("empty score matrix");
  for (std::size_t r = 0; r < m.runs(); ++r) {
    bool any = false;
    for (std::size_t t = 0; t < m.task_count() && !any; ++t) any = m.cell(t, r).has_value();
    if (!any) throw MetricsError("run " + std::to_string(r + 1) + " has no scored tasks");
  }
}

inline MeanStd summarize(std::vector<Rational> per_run) {
  MeanStd out;
  Rational sum = 0;
  for (const auto& v : per_run) sum += v;
  out.mean = sum / Rational(per_run.size());
  Rational sq = 0;
  for (const auto& v : per_run) sq += (v - out.mean) * (v - out.mean);
  out.variance = sq / Rational(per_run.size());
  out.per_run = std::move(per_run);
  return out;
}

template <typename CellFn>
MeanStd per_run_mean(const ScoreMatrix& m, CellFn&& value) {
  require_computable(m);
  std::vector<Rational> per_run;
  for (std::size_t r = 0; r < m.runs(); ++r) {
    Rational sum = 0;
    std::size_t present = 0;
    for (std::size_t t = 0; t < m.task_count(); ++t) {
      if (const auto& c = m.cell(t, r)) {
        sum += value(*c);
        ++present;
      }
    }
    per_run.push_back(sum / Rational(present));
  }
  return summarize(std::move(per_run));
}

}  // namespace detail

// Mean root score per run, then mean and population std over runs.
inline MeanStd partial_completion(const ScoreMatrix& m) {
  return detail::per_run_mean(m, [](const Rational& s) { return s; });
}

// Fraction of tasks whose root score is exactly 1, per run.
inline MeanStd success_rate(const ScoreMatrix& m) {
  return detail::per_run_mean(m, [](const Rational& s) { return s == 1 ? Rational(1) : Rational(0); });
}

// Fraction of tasks with at least one perfect score among their first k runs.
inline Rational pass_at_k(const ScoreMatrix& m, int k) {
  if (k <= 0 || static_cast<std::size_t>(k) > m.runs()) {
    throw MetricsError("k must be in [1, " + std::to_string(m.runs()) + "], got " + std::to_string(k));
  }
  if (m.task_count() == 0) throw MetricsError("empty score matrix");
  std::size_t passed = 0;
  for (std::size_t t = 0; t < m.task_count(); ++t) {
    for (std::size_t r = 0; r < static_cast<std::size_t>(k); ++r) {
      const auto& c = m.cell(t, r);
      if (c && *c == 1) {
        ++passed;
        break;
      }
    }
  }
  return Rational(passed) / Rational(m.task_count());
}

}  // namespace treejudge::metrics
