#include "promptlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "promptlab/error.hpp"
#include "promptlab/util.hpp"

namespace plab {

using nlohmann::json;

namespace {

CallContext make_context(const Program& program, const Example& example,
                         const std::string& canonical) {
  CallContext ctx;
  ctx.item_id = example.id;
  ctx.target = example.target;
  ctx.canonical_assignment = canonical;
  ctx.method = program.assignment.method;
  int demo_count = 0;
  for (const auto& demos : program.assignment.demos) {
    demo_count += static_cast<int>(demos.size());
  }
  ctx.demo_count = demo_count;
  ctx.instructions = program.assignment.instructions;
  return ctx;
}

void run_bounded(size_t n, int parallelism, const std::function<void(size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

double score_item(const Program& program, Backend& backend, const Example& example,
                  Metric metric, double rel_tol, const GenConfig& gen) {
  const std::string prompt = render_prompt(program, example.input);
  const CallContext ctx =
      make_context(program, example, canonical_assignment(program.assignment));
  const Completion completion = backend.complete(prompt, gen, ctx);
  const ParsedOutput parsed = parse_response(completion.text, program.assignment.method);
  return score(metric, parsed.output, example, rel_tol);
}

EvalReport evaluate_full(const Program& program, Backend& backend, const SplitView& split,
                         const EvalOptions& opts) {
  if (split.items.empty()) throw InvalidArgument("evaluate_full: empty split");
  validate_program(program);
  const std::string canonical = canonical_assignment(program.assignment);
  const Metric metric = split.dataset->metric;
  const double rel_tol = split.dataset->rel_tol;

  EvalReport report;
  report.n = static_cast<int>(split.items.size());
  report.per_item.resize(split.items.size());

  run_bounded(split.items.size(), opts.parallelism, [&](size_t i) {
    const Example& example = *split.items[i];
    ItemScore item;
    item.example_id = example.id;
    try {
      const std::string prompt = render_prompt(program, example.input);
      const Completion completion =
          backend.complete(prompt, opts.gen, make_context(program, example, canonical));
      const ParsedOutput parsed =
          parse_response(completion.text, program.assignment.method);
      item.score = score(metric, parsed.output, example, rel_tol);
    } catch (const ParseError&) {
      item.score = 0.0;  // failed completion
      item.failed = true;
    } catch (const BackendError&) {
      item.score = 0.0;
      item.failed = true;
    } catch (const UnavailableError&) {
      item.score = 0.0;
      item.failed = true;
    } catch (const ProtocolError&) {
      item.score = 0.0;
      item.failed = true;
    }
    report.per_item[i] = std::move(item);
  });

  double sum = 0.0;
  for (const auto& item : report.per_item) {
    sum += item.score;
    if (item.failed) ++report.failed_items;
  }
  report.aggregate = sum / static_cast<double>(report.per_item.size());
  report.valid = report.failed_items <=
                 static_cast<int>(opts.invalid_fraction *
                                  static_cast<double>(report.per_item.size()));

  std::vector<double> scores;
  scores.reserve(report.per_item.size());
  for (const auto& item : report.per_item) scores.push_back(item.score);
  std::tie(report.ci_lo, report.ci_hi) =
      bootstrap_ci(scores, opts.ci_level, opts.ci_resamples, opts.ci_seed);
  return report;
}

double minibatch_estimate(const Program& program, Backend& backend, const SplitView& split,
                          int minibatch_size, Rng& rng, const GenConfig& gen) {
  const auto n = split.items.size();
  if (minibatch_size < 1 || static_cast<size_t>(minibatch_size) > n) {
    throw InvalidArgument("minibatch size " + std::to_string(minibatch_size) +
                          " out of range [1, " + std::to_string(n) + "]");
  }
  validate_program(program);
  const Metric metric = split.dataset->metric;
  const double rel_tol = split.dataset->rel_tol;
  const auto draw = rng.sample_without_replacement(n, static_cast<size_t>(minibatch_size));
  double sum = 0.0;
  for (size_t i : draw) {
    sum += score_item(program, backend, *split.items[i], metric, rel_tol, gen);
  }
  return sum / static_cast<double>(minibatch_size);
}

std::pair<double, double> bootstrap_ci(std::span<const double> scores, double level,
                                       int resamples, uint64_t seed) {
  if (scores.empty()) throw InvalidArgument("bootstrap_ci: no scores");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("bootstrap_ci: level outside (0,1)");
  if (resamples < 100) throw InvalidArgument("bootstrap_ci: need at least 100 resamples");

  Rng rng(derive_seed(seed, "bootstrap"));
  const size_t n = scores.size();
  std::vector<double> means(static_cast<size_t>(resamples));
  for (auto& mean : means) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) sum += scores[rng.next_below(n)];
    mean = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());

  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = static_cast<size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  const double alpha = (1.0 - level) / 2.0;
  return {quantile(alpha), quantile(1.0 - alpha)};
}

CostRecord prompt_overhead(const Program& program, const Program& baseline_program,
                           std::span<const Example* const> sample_items,
                           const Tokenizer& tokenizer) {
  if (sample_items.empty()) throw InvalidArgument("prompt_overhead: no sample items");
  double total = 0.0;
  for (const Example* example : sample_items) {
    const auto own = tokenizer(render_prompt(program, example->input));
    const auto base = tokenizer(render_prompt(baseline_program, example->input));
    total += static_cast<double>(own - base);
  }
  CostRecord record;
  record.method = program.assignment.method;
  record.mean_additional_prompt_tokens = total / static_cast<double>(sample_items.size());
  return record;
}

// ---------------------------------------------------------------------------
// ResultGrid
// ---------------------------------------------------------------------------

void ResultGrid::set(const std::string& model, Method method, const std::string& benchmark,
                     GridCell cell) {
  cells_[{model, benchmark, method_name(method)}] = std::move(cell);
}

const GridCell* ResultGrid::find(const std::string& model, Method method,
                                 const std::string& benchmark) const {
  const auto it = cells_.find({model, benchmark, method_name(method)});
  return it == cells_.end() ? nullptr : &it->second;
}

const GridCell& ResultGrid::at(const std::string& model, Method method,
                               const std::string& benchmark) const {
  const GridCell* cell = find(model, method, benchmark);
  if (!cell) {
    throw InvalidArgument("missing grid cell (" + model + ", " + method_name(method) + ", " +
                          benchmark + ")");
  }
  return *cell;
}

std::vector<std::string> ResultGrid::models() const {
  std::set<std::string> out;
  for (const auto& [key, cell] : cells_) out.insert(std::get<0>(key));
  return {out.begin(), out.end()};
}

std::vector<std::string> ResultGrid::benchmarks() const {
  std::set<std::string> out;
  for (const auto& [key, cell] : cells_) out.insert(std::get<1>(key));
  return {out.begin(), out.end()};
}

std::vector<Method> ResultGrid::methods() const {
  std::set<std::string> names;
  for (const auto& [key, cell] : cells_) names.insert(std::get<2>(key));
  std::vector<Method> out;
  for (const auto& name : names) out.push_back(method_from_name(name));
  return out;
}

json ResultGrid::to_json() const {
  json cells = json::array();
  for (const auto& [key, cell] : cells_) {
    cells.push_back({{"model", std::get<0>(key)},
                     {"benchmark", std::get<1>(key)},
                     {"method", std::get<2>(key)},
                     {"score", cell.score_percent},
                     {"ci_halfwidth", cell.ci_halfwidth},
                     {"n", cell.n},
                     {"source", cell.source},
                     {"ok", cell.ok},
                     {"error", cell.error}});
  }
  return {{"cells", cells}};
}

ResultGrid ResultGrid::from_json(const json& j) {
  ResultGrid grid;
  for (const auto& cell : j.at("cells")) {
    GridCell c;
    c.score_percent = cell.at("score").get<double>();
    c.ci_halfwidth = cell.value("ci_halfwidth", 0.0);
    c.n = cell.value("n", 0);
    c.source = cell.value("source", "");
    c.ok = cell.value("ok", true);
    c.error = cell.value("error", "");
    grid.set(cell.at("model").get<std::string>(),
             method_from_name(cell.at("method").get<std::string>()),
             cell.at("benchmark").get<std::string>(), std::move(c));
  }
  return grid;
}

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

ResultGrid ResultGrid::from_fixture_csv(const std::string& path) {
  const std::string body = read_file(path);
  const auto lines = split_lines(body);
  if (lines.empty()) throw ParseError(path + ": empty fixture file");
  ResultGrid grid;
  size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1 && line.find("model_id") != std::string::npos) continue;  // header
    const auto fields = parse_csv_line(line);
    if (fields.size() < 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected >= 4 CSV fields");
    }
    GridCell cell;
    try {
      cell.score_percent = std::stod(fields[3]);
      if (fields.size() > 4 && !trim(fields[4]).empty()) cell.ci_halfwidth = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric score");
    }
    cell.source = fields.size() > 5 ? trim(fields[5]) : "fixture";
    grid.set(trim(fields[0]), method_from_name(fields[1]), trim(fields[2]), std::move(cell));
  }
  return grid;
}

}  // namespace plab
