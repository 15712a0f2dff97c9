#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "treejudge/metrics/metrics.hpp"
#include "treejudge/metrics/report.hpp"

namespace treejudge::metrics {
namespace {

Rational q(long long n, long long d = 1) { return make_rational(n, d); }

ScoreMatrix from_rows(const std::vector<std::vector<std::optional<Rational>>>& rows) {
  std::vector<std::string> tasks;
  for (std::size_t i = 0; i < rows.size(); ++i) tasks.push_back("t" + std::to_string(i + 1));
  ScoreMatrix m(tasks, rows.empty() ? 0 : rows[0].size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t r = 0; r < rows[t].size(); ++r) {
      if (rows[t][r]) m.set(t, r, *rows[t][r]);
    }
  }
  return m;
}

// Golden values frozen from an independent fraction-arithmetic recomputation.
ScoreMatrix golden_ten_by_three() {
  return from_rows({{q(1), q(1), q(1)},
                    {q(1, 2), q(1), q(0)},
                    {q(0), q(0), q(0)},
                    {q(1, 4), q(1, 3), q(1)},
                    {q(1), q(0), q(1, 2)},
                    {q(2, 3), q(2, 3), q(2, 3)},
                    {q(0), q(0), q(1)},
                    {q(1, 5), q(1), q(3, 4)},
                    {q(1), q(1, 2), q(0)},
                    {q(0), q(0), q(0)}});
}

ScoreMatrix random_matrix(std::mt19937_64& rng, std::size_t tasks, std::size_t runs, double absent = 0.0) {
  std::uniform_int_distribution<int> den(1, 12);
  std::bernoulli_distribution perfect(0.3), missing(absent);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tasks; ++i) names.push_back("task" + std::to_string(i));
  ScoreMatrix m(names, runs);
  for (std::size_t t = 0; t < tasks; ++t) {
    for (std::size_t r = 0; r < runs; ++r) {
      if (missing(rng) && t > 0) continue;
      if (perfect(rng)) {
        m.set(t, r, 1);
      } else {
        int d = den(rng);
        m.set(t, r, q(std::uniform_int_distribution<int>(0, d)(rng), d));
      }
    }
  }
  return m;
}

TEST(PartialCompletion, SingleCell) {
  auto pc = partial_completion(from_rows({{q(1, 2)}}));
  EXPECT_EQ(pc.mean, q(1, 2));
  EXPECT_EQ(pc.variance, 0);
  EXPECT_EQ(pc.std_dev(), 0.0);
}

TEST(PartialCompletion, SymmetricTwoByTwo) {
  auto pc = partial_completion(from_rows({{q(1), q(0)}, {q(0), q(1)}}));
  EXPECT_EQ(pc.per_run, (std::vector<Rational>{q(1, 2), q(1, 2)}));
  EXPECT_EQ(pc.mean, q(1, 2));
  EXPECT_EQ(pc.variance, 0);
}

TEST(PartialCompletion, GoldenTenByThree) {
  auto pc = partial_completion(golden_ten_by_three());
  EXPECT_EQ(pc.per_run, (std::vector<Rational>{q(277, 600), q(9, 20), q(59, 120)}));
  EXPECT_EQ(pc.mean, q(421, 900));
  EXPECT_EQ(pc.variance, q(499, 1620000));
  EXPECT_NEAR(pc.std_dev(), 0.017550632221034795, 1e-15);
}

TEST(PartialCompletion, MatchesTwoLoopRecomputation) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    auto m = random_matrix(rng, 10, 3);
    Rational total = 0;
    std::vector<Rational> runs;
    for (std::size_t r = 0; r < 3; ++r) {
      Rational s = 0;
      for (std::size_t t = 0; t < 10; ++t) s += *m.cell(t, r);
      runs.push_back(s / 10);
      total += s / 10;
    }
    auto pc = partial_completion(m);
    EXPECT_EQ(pc.per_run, runs);
    EXPECT_EQ(pc.mean, total / 3);
  }
}

TEST(PartialCompletion, EmptyMatrixRejected) {
  EXPECT_THROW(partial_completion(ScoreMatrix({}, 3)), MetricsError);
  ScoreMatrix blank({"a"}, 1);
  EXPECT_THROW(partial_completion(blank), MetricsError);
}

TEST(SuccessRate, StrictPerfection) {
  Rational almost = Rational(9999, 10000);
  auto sr = success_rate(from_rows({{almost}, {almost}}));
  EXPECT_EQ(sr.mean, 0);
}

TEST(SuccessRate, TwoOfThree) {
  EXPECT_EQ(success_rate(from_rows({{q(1)}, {q(1)}, {q(0)}})).mean, q(2, 3));
}

TEST(SuccessRate, GoldenTenByThree) {
  auto sr = success_rate(golden_ten_by_three());
  EXPECT_EQ(sr.per_run, (std::vector<Rational>{q(3, 10), q(3, 10), q(3, 10)}));
  EXPECT_EQ(sr.mean, q(3, 10));
  EXPECT_EQ(sr.variance, 0);
}

TEST(SuccessRate, NeverExceedsPartialCompletionPerRun) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    auto m = random_matrix(rng, 10, 3, 0.1);
    auto pc = partial_completion(m);
    auto sr = success_rate(m);
    for (std::size_t r = 0; r < 3; ++r) ASSERT_LE(sr.per_run[r], pc.per_run[r]);
  }
}

TEST(AbsentCells, ExcludedFromMeans) {
  auto m = from_rows({{q(1), std::nullopt, q(1)}, {q(1, 2), q(1, 2), std::nullopt}, {q(0), q(1), q(0)}});
  auto pc = partial_completion(m);
  EXPECT_EQ(pc.per_run, (std::vector<Rational>{q(1, 2), q(3, 4), q(1, 2)}));
  EXPECT_EQ(pc.mean, q(7, 12));
  EXPECT_EQ(pc.variance, q(1, 72));
  auto sr = success_rate(m);
  EXPECT_EQ(sr.per_run, (std::vector<Rational>{q(1, 3), q(1, 2), q(1, 2)}));
  EXPECT_EQ(sr.mean, q(4, 9));
  EXPECT_EQ(sr.variance, q(1, 162));
  EXPECT_EQ(m.absent_cells(), 2u);
}

TEST(PassAtK, HalfOfTasks) {
  EXPECT_EQ(pass_at_k(from_rows({{q(1), q(0), q(0)}, {q(0), q(0), q(0)}}), 3), q(1, 2));
}

TEST(PassAtK, GoldenTenByThree) {
  auto m = golden_ten_by_three();
  EXPECT_EQ(pass_at_k(m, 1), q(3, 10));
  EXPECT_EQ(pass_at_k(m, 2), q(1, 2));
  EXPECT_EQ(pass_at_k(m, 3), q(7, 10));
}

TEST(PassAtK, KOneIsFirstRunSuccessRate) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    auto m = random_matrix(rng, 10, 3);
    EXPECT_EQ(pass_at_k(m, 1), success_rate(m).per_run[0]);
  }
}

TEST(PassAtK, MonotoneInK) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    auto m = random_matrix(rng, 10, 5, 0.1);
    for (int k = 1; k < 5; ++k) ASSERT_LE(pass_at_k(m, k), pass_at_k(m, k + 1));
  }
}

TEST(PassAtK, RejectsBadK) {
  auto m = golden_ten_by_three();
  EXPECT_THROW(pass_at_k(m, 0), MetricsError);
  EXPECT_THROW(pass_at_k(m, 4), MetricsError);
}

TEST(Metrics, InvariantUnderTaskReordering) {
  std::mt19937_64 rng(15);
  auto m = random_matrix(rng, 10, 3, 0.1);
  std::vector<std::size_t> order(10);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> names;
  for (auto i : order) names.push_back(m.tasks()[i]);
  ScoreMatrix shuffled(names, 3);
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t r = 0; r < 3; ++r) {
      if (auto c = m.cell(order[t], r)) shuffled.set(t, r, *c);
    }
  }
  EXPECT_EQ(partial_completion(m).mean, partial_completion(shuffled).mean);
  EXPECT_EQ(success_rate(m).mean, success_rate(shuffled).mean);
  EXPECT_EQ(pass_at_k(m, 3), pass_at_k(shuffled, 3));
}

TEST(Report, TableHasMetricColumnsAndAppendix) {
  auto m = from_rows({{q(1), std::nullopt, q(1)}, {q(1, 2), q(1, 2), q(0)}});
  auto r = emit_report(m, 3, "agent-x", {"o4-mini", true, "2025-06-01T00:00:00Z"});
  auto table = render_table({r});
  EXPECT_NE(table.find("Partial Completion"), std::string::npos);
  EXPECT_NE(table.find("Success Rate"), std::string::npos);
  EXPECT_NE(table.find("Pass@3"), std::string::npos);
  EXPECT_NE(table.find("Per-task root scores: agent-x"), std::string::npos);
  EXPECT_NE(table.find("—"), std::string::npos);
  EXPECT_NE(table.find("* 1 absent cell(s) excluded"), std::string::npos);

  auto j = report_to_json(r);
  EXPECT_EQ(j["per_task"][0]["scores"][1], nullptr);
  EXPECT_EQ(j["provenance"]["model"], "o4-mini");
  EXPECT_EQ(j["absent_cells"], 1);
}

TEST(Report, ReEmissionIsByteIdentical) {
  auto m = golden_ten_by_three();
  Provenance p{"o4-mini", true, "2025-06-01T00:00:00Z"};
  auto a = to_canonical_text(report_to_json(emit_report(m, 3, "a", p))) + render_table({emit_report(m, 3, "a", p)});
  auto b = to_canonical_text(report_to_json(emit_report(m, 3, "a", p))) + render_table({emit_report(m, 3, "a", p)});
  EXPECT_EQ(a, b);
  EXPECT_EQ(matrix_to_csv(m), matrix_to_csv(golden_ten_by_three()));
}

TEST(Report, CsvLeavesAbsentCellsEmpty) {
  auto m = from_rows({{q(1), std::nullopt}});
  EXPECT_EQ(matrix_to_csv(m), "task,run_1,run_2\nt1,1.0000,\n");
}

}  // namespace
}  // namespace treejudge::metrics
