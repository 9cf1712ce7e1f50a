#include "promptlab/leaderboard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "promptlab/error.hpp"

namespace plab {

using nlohmann::json;

namespace {

const std::vector<Method> kStructuredMethods = {Method::ZeroShotCot, Method::Bfrs,
                                                Method::MiproV2};

std::vector<Method> nonbaseline_methods(const ResultGrid& grid, CeilingSelector selector) {
  if (selector == CeilingSelector::StructuredOnly) return kStructuredMethods;
  std::vector<Method> out;
  for (Method m : grid.methods()) {
    if (m != Method::HelmBaseline) out.push_back(m);
  }
  return out;
}

std::vector<double> model_scores(const ResultGrid& grid, const std::string& model,
                                 Method method) {
  std::vector<double> scores;
  for (const auto& benchmark : grid.benchmarks()) {
    scores.push_back(grid.at(model, method, benchmark).score_percent);
  }
  return scores;
}

double ceiling_score(const ResultGrid& grid, const std::string& model,
                     const std::string& benchmark, const std::vector<Method>& methods) {
  double best = -std::numeric_limits<double>::infinity();
  for (Method method : methods) {
    best = std::max(best, grid.at(model, method, benchmark).score_percent);
  }
  return best;
}

// Ranks 1..n (1 = highest score); tied scores share the average rank.
std::vector<double> rank_scores(const std::vector<double>& scores) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

MacroStats macro_average(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("macro_average: empty score list");
  MacroStats stats;
  for (double s : scores) stats.mean += s;
  stats.mean /= static_cast<double>(scores.size());
  if (scores.size() > 1) {
    double ss = 0.0;
    for (double s : scores) ss += (s - stats.mean) * (s - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  }
  return stats;
}

std::vector<LeaderboardRow> build_rows(const ResultGrid& grid) {
  std::vector<LeaderboardRow> rows;
  for (const auto& model : grid.models()) {
    for (Method method : grid.methods()) {
      LeaderboardRow row;
      row.model = model;
      row.method = method;
      row.per_benchmark = model_scores(grid, model, method);
      row.macro = macro_average(row.per_benchmark);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double ceiling_delta(const ResultGrid& grid, const std::string& model,
                     CeilingSelector selector) {
  const auto baseline = macro_average(model_scores(grid, model, Method::HelmBaseline));
  double best = -std::numeric_limits<double>::infinity();
  for (Method method : nonbaseline_methods(grid, selector)) {
    best = std::max(best, macro_average(model_scores(grid, model, method)).mean);
  }
  if (std::isinf(best)) throw InvalidArgument("ceiling_delta: no non-baseline methods");
  return best - baseline.mean;
}

GainSummary structured_gain_summary(const ResultGrid& grid) {
  GainSummary summary;
  const auto models = grid.models();
  if (models.empty()) throw InvalidArgument("structured_gain_summary: empty grid");
  for (const auto& model : models) {
    const auto baseline = macro_average(model_scores(grid, model, Method::HelmBaseline));
    double mean_sum = 0.0, sigma_sum = 0.0;
    for (Method method : kStructuredMethods) {
      const auto stats = macro_average(model_scores(grid, model, method));
      mean_sum += stats.mean;
      sigma_sum += stats.stddev;
    }
    const double k = static_cast<double>(kStructuredMethods.size());
    summary.avg_delta += mean_sum / k - baseline.mean;
    summary.avg_sigma_change += sigma_sum / k - baseline.stddev;
  }
  summary.avg_delta /= static_cast<double>(models.size());
  summary.avg_sigma_change /= static_cast<double>(models.size());
  return summary;
}

std::vector<RankStat> compute_ranks(const ResultGrid& grid, RankSelector selector) {
  const auto models = grid.models();
  const auto benchmarks = grid.benchmarks();
  if (models.empty() || benchmarks.empty()) {
    throw InvalidArgument("compute_ranks: empty grid");
  }
  std::vector<std::vector<double>> per_model_ranks(models.size());
  for (const auto& benchmark : benchmarks) {
    std::vector<double> scores;
    scores.reserve(models.size());
    for (const auto& model : models) {
      if (selector == RankSelector::Baseline) {
        scores.push_back(grid.at(model, Method::HelmBaseline, benchmark).score_percent);
      } else {
        scores.push_back(ceiling_score(grid, model, benchmark, kStructuredMethods));
      }
    }
    const auto ranks = rank_scores(scores);
    for (size_t m = 0; m < models.size(); ++m) per_model_ranks[m].push_back(ranks[m]);
  }
  std::vector<RankStat> out;
  for (size_t m = 0; m < models.size(); ++m) {
    const auto stats = macro_average(per_model_ranks[m]);
    out.push_back({models[m], stats.mean, stats.stddev});
  }
  return out;
}

std::vector<FlipRecord> detect_flips(const ResultGrid& grid) {
  const auto models = grid.models();
  const auto benchmarks = grid.benchmarks();
  const auto ceiling_methods = nonbaseline_methods(grid, CeilingSelector::AllNonBaseline);
  std::vector<FlipRecord> flips;
  for (const auto& benchmark : benchmarks) {
    for (size_t a = 0; a < models.size(); ++a) {
      for (size_t b = a + 1; b < models.size(); ++b) {
        const double base_a =
            grid.at(models[a], Method::HelmBaseline, benchmark).score_percent;
        const double base_b =
            grid.at(models[b], Method::HelmBaseline, benchmark).score_percent;
        const double ceil_a = ceiling_score(grid, models[a], benchmark, ceiling_methods);
        const double ceil_b = ceiling_score(grid, models[b], benchmark, ceiling_methods);
        if ((base_a - base_b) * (ceil_a - ceil_b) >= 0.0) continue;  // no strict reversal
        FlipRecord flip;
        flip.benchmark = benchmark;
        const bool a_led = base_a > base_b;
        flip.winner_baseline = a_led ? models[a] : models[b];
        flip.winner_ceiling = a_led ? models[b] : models[a];
        flip.baseline_scores[0] = a_led ? base_a : base_b;
        flip.baseline_scores[1] = a_led ? base_b : base_a;
        flip.ceiling_scores[0] = a_led ? ceil_b : ceil_a;
        flip.ceiling_scores[1] = a_led ? ceil_a : ceil_b;
        flips.push_back(std::move(flip));
      }
    }
  }
  return flips;
}

json leaderboard_report(const ResultGrid& grid) {
  json rows = json::array();
  for (const auto& row : build_rows(grid)) {
    json per_benchmark = json::object();
    const auto benchmarks = grid.benchmarks();
    for (size_t b = 0; b < benchmarks.size(); ++b) {
      per_benchmark[benchmarks[b]] = row.per_benchmark[b];
    }
    rows.push_back({{"model", row.model},
                    {"method", method_name(row.method)},
                    {"macro_mean", row.macro.mean},
                    {"macro_std", row.macro.stddev},
                    {"per_benchmark", per_benchmark}});
  }
  json deltas = json::object();
  for (const auto& model : grid.models()) {
    deltas[model] = ceiling_delta(grid, model);
  }
  const GainSummary gains = structured_gain_summary(grid);
  const auto rank_block = [&](RankSelector selector) {
    json out = json::array();
    for (const auto& stat : compute_ranks(grid, selector)) {
      out.push_back({{"model", stat.model},
                     {"mean_rank", stat.mean_rank},
                     {"rank_std", stat.rank_std}});
    }
    return out;
  };
  json flip_list = json::array();
  for (const auto& flip : detect_flips(grid)) {
    flip_list.push_back({{"benchmark", flip.benchmark},
                         {"winner_baseline", flip.winner_baseline},
                         {"winner_ceiling", flip.winner_ceiling},
                         {"baseline_scores", {flip.baseline_scores[0], flip.baseline_scores[1]}},
                         {"ceiling_scores", {flip.ceiling_scores[0], flip.ceiling_scores[1]}}});
  }
  return {{"rows", rows},
          {"ceiling_delta", deltas},
          {"gain_summary",
           {{"avg_delta", gains.avg_delta}, {"avg_sigma_change", gains.avg_sigma_change}}},
          {"ranks",
           {{"baseline", rank_block(RankSelector::Baseline)},
            {"structured_ceiling", rank_block(RankSelector::StructuredCeiling)}}},
          {"flips", flip_list}};
}

}  // namespace plab
