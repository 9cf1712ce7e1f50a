#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "promptlab/rng.hpp"

namespace plab {

inline constexpr double kDistributionTolerance = 1e-12;

// Finite distribution over reasoning paths induced by one prompt.
struct PathDistribution {
  std::vector<std::string> support;  // path ids
  std::vector<double> probs;
};

struct AnswerDistribution {
  std::vector<std::string> labels;
  std::vector<double> probs;
};

// Conditional answer distribution per path; prompt-independent by
// construction (the channel approximation is hard-coded, not estimated).
struct AnswerChannel {
  std::vector<std::string> labels;
  std::map<std::string, std::vector<double>> rows;  // path id -> P(y | path)
};

void validate_distribution(const std::vector<double>& probs, const std::string& what);

// P(y) = sum_path P(path) * P(y | path).
AnswerDistribution marginal_answer_dist(const PathDistribution& paths,
                                        const AnswerChannel& channel);

// 1/2 * sum |p - q| over a shared support.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);
double tv_distance(const AnswerDistribution& p, const AnswerDistribution& q);
double tv_distance(const PathDistribution& p, const PathDistribution& q);

// Natural-log KL with 0*log(0/q) = 0; p>0 against q=0 yields +infinity.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
double kl_divergence(const PathDistribution& p, const PathDistribution& q);

struct DpiCheck {
  double tv_y = 0.0;
  double tv_tau = 0.0;
  bool holds = false;  // tv_y <= tv_tau (+ tolerance)
};
DpiCheck check_dpi(const PathDistribution& paths_p, const PathDistribution& paths_q,
                   const AnswerChannel& channel);

struct PinskerCheck {
  double tv_y = 0.0;
  double bound = 0.0;  // sqrt(KL(paths_p || paths_q) / 2); +inf when KL diverges
  bool holds = false;
};
PinskerCheck check_pinsker(const PathDistribution& paths_p, const PathDistribution& paths_q,
                           const AnswerChannel& channel);

struct DecisionMargin {
  std::string label;     // argmax label (ties -> lowest index)
  int label_index = -1;
  double margin = 0.0;   // top prob minus runner-up prob
};
DecisionMargin decision_margin(const AnswerDistribution& dist);

struct StabilityVerdict {
  bool guaranteed_invariant = false;  // TV(P, P') < margin(P) / 2
  bool argmax_equal = false;
};
StabilityVerdict stability_verdict(const AnswerDistribution& p, const AnswerDistribution& q);

// sqrt(kappa / 2) < margin / 2: the KL-budget sufficient condition for
// argmax invariance.
bool kl_margin_sufficient(double kappa, double margin);

// ---------------------------------------------------------------------------
// Scenario files and randomized sweeps
// ---------------------------------------------------------------------------
struct StabilityScenario {
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, PathDistribution>> prompts;  // (name, paths)
  AnswerChannel channel;
};

StabilityScenario load_scenario(const std::string& path);
nlohmann::json run_scenario(const StabilityScenario& scenario);

struct SweepRow {
  double tv_tau = 0.0;
  double tv_y = 0.0;
  double kl = 0.0;
  double pinsker_bound = 0.0;
  double margin = 0.0;
  bool dpi_holds = false;
  bool pinsker_holds = false;
  bool guaranteed = false;
  bool argmax_equal = false;
};

// Random (paths, paths', channel) triples with supports up to max_support
// paths and max_labels answer labels; fully determined by the seed.
std::vector<SweepRow> run_sweep(int n, uint64_t seed, int max_support = 6,
                                int max_labels = 4);
nlohmann::json sweep_summary(const std::vector<SweepRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// The worked two-path example: Bernoulli(0.5) vs Bernoulli(0.6) paths through
// a fixed binary channel.
nlohmann::json demo_report();

}  // namespace plab
