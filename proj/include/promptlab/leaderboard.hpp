#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "promptlab/harness.hpp"

namespace plab {

struct MacroStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n-1 denominator); 0 when n == 1
};

MacroStats macro_average(std::span<const double> scores);  // throws on empty input

struct LeaderboardRow {
  std::string model;
  Method method = Method::HelmBaseline;
  std::vector<double> per_benchmark;  // grid benchmark order
  MacroStats macro;
};

// One row per (model, method) over all benchmarks in the grid; every cell
// must exist.
std::vector<LeaderboardRow> build_rows(const ResultGrid& grid);

// Which methods count toward a "ceiling". Table-style deltas use every
// non-baseline method; the rank stability analysis uses the CoT trio only.
enum class CeilingSelector { AllNonBaseline, StructuredOnly };

// Best non-baseline macro mean minus the baseline macro mean for one model.
double ceiling_delta(const ResultGrid& grid, const std::string& model,
                     CeilingSelector selector = CeilingSelector::AllNonBaseline);

struct GainSummary {
  double avg_delta = 0.0;         // mean over models of (mean structured macro - baseline macro)
  double avg_sigma_change = 0.0;  // same aggregation on macro stddevs
};
GainSummary structured_gain_summary(const ResultGrid& grid);

enum class RankSelector { Baseline, StructuredCeiling };

struct RankStat {
  std::string model;
  double mean_rank = 0.0;  // 1 = best; ties get the average rank
  double rank_std = 0.0;   // sample std over benchmarks
};
std::vector<RankStat> compute_ranks(const ResultGrid& grid, RankSelector selector);

// A pair of models whose relative order reverses between baseline and the
// all-methods ceiling on one benchmark. winner_* holds the model that is
// strictly ahead in each regime.
struct FlipRecord {
  std::string benchmark;
  std::string winner_baseline;
  std::string winner_ceiling;
  double baseline_scores[2] = {0.0, 0.0};  // winner_baseline first
  double ceiling_scores[2] = {0.0, 0.0};   // winner_ceiling first
};
std::vector<FlipRecord> detect_flips(const ResultGrid& grid);

// Full leaderboard report: per-row macro stats, ceiling deltas, gain summary,
// rank statistics under both selectors, and the flip list.
nlohmann::json leaderboard_report(const ResultGrid& grid);

}  // namespace plab
