#include "promptlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "promptlab/error.hpp"
#include "promptlab/util.hpp"

namespace plab {

using nlohmann::json;

void validate_distribution(const std::vector<double>& probs, const std::string& what) {
  if (probs.empty()) throw InvalidArgument(what + ": empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw InvalidArgument(what + ": negative probability");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kDistributionTolerance) {
    throw InvalidArgument(what + ": probabilities sum to " + std::to_string(sum));
  }
}

AnswerDistribution marginal_answer_dist(const PathDistribution& paths,
                                        const AnswerChannel& channel) {
  validate_distribution(paths.probs, "path distribution");
  if (paths.support.size() != paths.probs.size()) {
    throw InvalidArgument("path support/probs size mismatch");
  }
  AnswerDistribution out;
  out.labels = channel.labels;
  out.probs.assign(channel.labels.size(), 0.0);
  for (size_t t = 0; t < paths.support.size(); ++t) {
    const auto row = channel.rows.find(paths.support[t]);
    if (row == channel.rows.end()) {
      throw InvalidArgument("channel has no row for path " + paths.support[t]);
    }
    if (row->second.size() != channel.labels.size()) {
      throw InvalidArgument("channel row size mismatch for path " + paths.support[t]);
    }
    validate_distribution(row->second, "channel row " + paths.support[t]);
    for (size_t y = 0; y < out.probs.size(); ++y) {
      out.probs[y] += paths.probs[t] * row->second[y];
    }
  }
  return out;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("tv_distance: mismatched supports");
  validate_distribution(p, "tv lhs");
  validate_distribution(q, "tv rhs");
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) sum += std::fabs(p[i] - q[i]);
  return 0.5 * sum;
}

double tv_distance(const AnswerDistribution& p, const AnswerDistribution& q) {
  if (p.labels != q.labels) throw InvalidArgument("tv_distance: mismatched label sets");
  return tv_distance(p.probs, q.probs);
}

double tv_distance(const PathDistribution& p, const PathDistribution& q) {
  if (p.support != q.support) throw InvalidArgument("tv_distance: mismatched path supports");
  return tv_distance(p.probs, q.probs);
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("kl_divergence: mismatched supports");
  validate_distribution(p, "kl lhs");
  validate_distribution(q, "kl rhs");
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return sum;
}

double kl_divergence(const PathDistribution& p, const PathDistribution& q) {
  if (p.support != q.support) {
    throw InvalidArgument("kl_divergence: mismatched path supports");
  }
  return kl_divergence(p.probs, q.probs);
}

DpiCheck check_dpi(const PathDistribution& paths_p, const PathDistribution& paths_q,
                   const AnswerChannel& channel) {
  DpiCheck check;
  check.tv_tau = tv_distance(paths_p, paths_q);
  check.tv_y = tv_distance(marginal_answer_dist(paths_p, channel),
                           marginal_answer_dist(paths_q, channel));
  check.holds = check.tv_y <= check.tv_tau + kDistributionTolerance;
  return check;
}

PinskerCheck check_pinsker(const PathDistribution& paths_p, const PathDistribution& paths_q,
                           const AnswerChannel& channel) {
  PinskerCheck check;
  check.tv_y = tv_distance(marginal_answer_dist(paths_p, channel),
                           marginal_answer_dist(paths_q, channel));
  const double kl = kl_divergence(paths_p, paths_q);
  if (std::isinf(kl)) {
    check.bound = std::numeric_limits<double>::infinity();
    check.holds = true;  // vacuous
    return check;
  }
  check.bound = std::sqrt(kl / 2.0);
  check.holds = check.tv_y <= check.bound + kDistributionTolerance;
  return check;
}

DecisionMargin decision_margin(const AnswerDistribution& dist) {
  if (dist.labels.size() < 2) {
    throw InvalidArgument("decision_margin requires at least 2 labels");
  }
  validate_distribution(dist.probs, "answer distribution");
  size_t top = 0;
  for (size_t i = 1; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > dist.probs[top]) top = i;  // ties keep the lowest index
  }
  double runner_up = -1.0;
  for (size_t i = 0; i < dist.probs.size(); ++i) {
    if (i != top) runner_up = std::max(runner_up, dist.probs[i]);
  }
  DecisionMargin margin;
  margin.label = dist.labels[top];
  margin.label_index = static_cast<int>(top);
  margin.margin = dist.probs[top] - runner_up;
  return margin;
}

StabilityVerdict stability_verdict(const AnswerDistribution& p, const AnswerDistribution& q) {
  if (p.labels != q.labels) throw InvalidArgument("stability_verdict: mismatched labels");
  const DecisionMargin margin_p = decision_margin(p);
  const DecisionMargin margin_q = decision_margin(q);
  StabilityVerdict verdict;
  verdict.guaranteed_invariant =
      tv_distance(p, q) < 0.5 * margin_p.margin - kDistributionTolerance;
  verdict.argmax_equal = margin_p.label_index == margin_q.label_index;
  return verdict;
}

bool kl_margin_sufficient(double kappa, double margin) {
  if (kappa < 0.0) throw InvalidArgument("kl_margin_sufficient: negative kappa");
  return std::sqrt(kappa / 2.0) < margin / 2.0;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

StabilityScenario load_scenario(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": malformed scenario JSON: " + e.what());
  }
  StabilityScenario scenario;
  try {
    scenario.labels = doc.at("labels").get<std::vector<std::string>>();
    scenario.channel.labels = scenario.labels;
    for (const auto& [path_id, row] : doc.at("channel").items()) {
      scenario.channel.rows[path_id] = row.get<std::vector<double>>();
    }
    for (const auto& prompt : doc.at("prompts")) {
      PathDistribution paths;
      for (const auto& [path_id, prob] : prompt.at("paths").items()) {
        paths.support.push_back(path_id);
        paths.probs.push_back(prob.get<double>());
      }
      scenario.prompts.emplace_back(prompt.at("name").get<std::string>(), std::move(paths));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": scenario shape error: " + e.what());
  }
  if (scenario.prompts.empty()) throw ConfigError(path + ": scenario has no prompts");
  return scenario;
}

json run_scenario(const StabilityScenario& scenario) {
  json prompts = json::array();
  for (const auto& [name, paths] : scenario.prompts) {
    const AnswerDistribution marginal = marginal_answer_dist(paths, scenario.channel);
    const DecisionMargin margin = decision_margin(marginal);
    prompts.push_back({{"name", name},
                       {"answer_probs", marginal.probs},
                       {"argmax_label", margin.label},
                       {"margin", margin.margin}});
  }
  json pairs = json::array();
  for (size_t i = 0; i < scenario.prompts.size(); ++i) {
    for (size_t j = i + 1; j < scenario.prompts.size(); ++j) {
      const auto& [name_p, paths_p] = scenario.prompts[i];
      const auto& [name_q, paths_q] = scenario.prompts[j];
      const auto dpi = check_dpi(paths_p, paths_q, scenario.channel);
      const auto pinsker = check_pinsker(paths_p, paths_q, scenario.channel);
      const auto verdict =
          stability_verdict(marginal_answer_dist(paths_p, scenario.channel),
                            marginal_answer_dist(paths_q, scenario.channel));
      const double kl = kl_divergence(paths_p, paths_q);
      pairs.push_back({{"prompts", {name_p, name_q}},
                       {"tv_paths", dpi.tv_tau},
                       {"tv_answers", dpi.tv_y},
                       {"kl_paths", std::isinf(kl) ? json("inf") : json(kl)},
                       {"dpi_holds", dpi.holds},
                       {"pinsker_bound",
                        std::isinf(pinsker.bound) ? json("inf") : json(pinsker.bound)},
                       {"pinsker_holds", pinsker.holds},
                       {"guaranteed_invariant", verdict.guaranteed_invariant},
                       {"argmax_equal", verdict.argmax_equal}});
    }
  }
  return {{"labels", scenario.labels}, {"prompts", prompts}, {"pairs", pairs}};
}

namespace {

std::vector<double> random_distribution(Rng& rng, size_t n) {
  // exponential draws normalized: a symmetric Dirichlet(1) sample
  std::vector<double> probs(n);
  double sum = 0.0;
  for (auto& p : probs) {
    p = -std::log(1.0 - rng.next_unit());
    sum += p;
  }
  for (auto& p : probs) p /= sum;
  // pin the residual rounding error on the largest entry so the sum is exact
  double total = 0.0;
  for (double p : probs) total += p;
  const auto largest = std::max_element(probs.begin(), probs.end());
  *largest += 1.0 - total;
  return probs;
}

}  // namespace

std::vector<SweepRow> run_sweep(int n, uint64_t seed, int max_support, int max_labels) {
  if (n < 1) throw InvalidArgument("run_sweep: n must be >= 1");
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "sweep", static_cast<uint64_t>(i)));
    const size_t n_paths = 2 + rng.next_below(static_cast<uint64_t>(max_support - 1));
    const size_t n_labels = 2 + rng.next_below(static_cast<uint64_t>(max_labels - 1));

    PathDistribution paths_p, paths_q;
    for (size_t t = 0; t < n_paths; ++t) {
      paths_p.support.push_back("t" + std::to_string(t));
    }
    paths_q.support = paths_p.support;
    paths_p.probs = random_distribution(rng, n_paths);
    paths_q.probs = random_distribution(rng, n_paths);

    AnswerChannel channel;
    for (size_t y = 0; y < n_labels; ++y) channel.labels.push_back("y" + std::to_string(y));
    for (const auto& path_id : paths_p.support) {
      channel.rows[path_id] = random_distribution(rng, n_labels);
    }

    SweepRow row;
    const auto dpi = check_dpi(paths_p, paths_q, channel);
    const auto pinsker = check_pinsker(paths_p, paths_q, channel);
    const auto marginal_p = marginal_answer_dist(paths_p, channel);
    const auto marginal_q = marginal_answer_dist(paths_q, channel);
    const auto verdict = stability_verdict(marginal_p, marginal_q);
    row.tv_tau = dpi.tv_tau;
    row.tv_y = dpi.tv_y;
    row.kl = kl_divergence(paths_p, paths_q);
    row.pinsker_bound = pinsker.bound;
    row.margin = decision_margin(marginal_p).margin;
    row.dpi_holds = dpi.holds;
    row.pinsker_holds = pinsker.holds;
    row.guaranteed = verdict.guaranteed_invariant;
    row.argmax_equal = verdict.argmax_equal;
    rows.push_back(row);
  }
  return rows;
}

json sweep_summary(const std::vector<SweepRow>& rows) {
  size_t dpi = 0, pinsker = 0, guaranteed = 0, argmax = 0, sound = 0;
  for (const auto& row : rows) {
    dpi += row.dpi_holds;
    pinsker += row.pinsker_holds;
    guaranteed += row.guaranteed;
    argmax += row.argmax_equal;
    sound += !row.guaranteed || row.argmax_equal;
  }
  return {{"triples", rows.size()},
          {"dpi_holds", dpi},
          {"pinsker_holds", pinsker},
          {"guaranteed_invariant", guaranteed},
          {"argmax_equal", argmax},
          {"guarantee_sound", sound == rows.size()}};
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "tv_paths,tv_answers,kl_paths,pinsker_bound,margin,dpi_holds,pinsker_holds,"
         "guaranteed_invariant,argmax_equal\n";
  for (const auto& row : rows) {
    out << row.tv_tau << ',' << row.tv_y << ',' << row.kl << ',' << row.pinsker_bound << ','
        << row.margin << ',' << row.dpi_holds << ',' << row.pinsker_holds << ','
        << row.guaranteed << ',' << row.argmax_equal << '\n';
  }
  return out.str();
}

json demo_report() {
  StabilityScenario scenario;
  scenario.labels = {"A", "B"};
  scenario.channel.labels = scenario.labels;
  scenario.channel.rows["t0"] = {0.9, 0.1};
  scenario.channel.rows["t1"] = {0.2, 0.8};
  PathDistribution p{{"t0", "t1"}, {0.5, 0.5}};
  PathDistribution q{{"t0", "t1"}, {0.6, 0.4}};
  scenario.prompts.emplace_back("p", p);
  scenario.prompts.emplace_back("p_prime", q);
  return run_scenario(scenario);
}

}  // namespace plab
