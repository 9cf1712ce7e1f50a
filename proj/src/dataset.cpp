#include "promptlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "json.hpp"
#include "promptlab/error.hpp"
#include "promptlab/rng.hpp"
#include "promptlab/util.hpp"

namespace plab {

using nlohmann::json;

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::ExactMatch: return "exact_match";
    case Metric::NumericRange: return "numeric_range";
    case Metric::BinaryErrorFlag: return "binary_error_flag";
  }
  return "unknown";
}

Metric metric_from_name(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "exact_match") return Metric::ExactMatch;
  if (n == "numeric_range") return Metric::NumericRange;
  if (n == "binary_error_flag") return Metric::BinaryErrorFlag;
  throw ConfigError("unknown metric: " + name);
}

const char* split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "unknown";
}

SplitView Dataset::view(SplitTag tag) const {
  const std::vector<size_t>* idx = &train_idx;
  if (tag == SplitTag::Val) idx = &val_idx;
  if (tag == SplitTag::Test) idx = &test_idx;
  SplitView v;
  v.dataset = this;
  v.tag = tag;
  v.items.reserve(idx->size());
  for (size_t i : *idx) v.items.push_back(&examples[i]);
  return v;
}

SplitView Dataset::train() const { return view(SplitTag::Train); }
SplitView Dataset::val() const { return view(SplitTag::Val); }
SplitView Dataset::test() const { return view(SplitTag::Test); }

namespace {

std::string json_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number_float()) {
    json holder = v;  // round-trip through dump for a canonical rendering
    return holder.dump();
  }
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  throw ParseError("field is not a scalar");
}

}  // namespace

Dataset load_dataset(const std::string& path, const DatasetConfig& cfg,
                     const std::string& name) {
  const std::string body = read_file(path);
  Dataset ds;
  ds.name = name.empty() ? path : name;
  ds.metric = cfg.metric;
  ds.rel_tol = cfg.rel_tol;

  std::set<std::string> seen_ids;
  std::vector<size_t> pinned_train, pinned_val;
  size_t line_no = 0;
  for (const auto& line : split_lines(body)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("input") ||
        !obj.contains("target")) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected object with id/input/target");
    }
    Example ex;
    try {
      ex.id = json_to_string(obj["id"]);
      ex.input = json_to_string(obj["input"]);
      ex.target = json_to_string(obj["target"]);
      if (obj.contains("meta")) {
        for (const auto& [k, v] : obj["meta"].items()) ex.meta[k] = json_to_string(v);
      }
    } catch (const ParseError&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-scalar field");
    }
    if (ex.target.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty target for id " + ex.id);
    }
    if (!seen_ids.insert(ex.id).second) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate id " + ex.id);
    }
    const size_t index = ds.examples.size();
    if (obj.contains("split")) {
      const std::string tag = to_lower(json_to_string(obj["split"]));
      if (tag == "test") {
        ds.test_idx.push_back(index);
      } else if (tag == "train") {
        pinned_train.push_back(index);
      } else if (tag == "val") {
        pinned_val.push_back(index);
      } else {
        throw ParseError(path + ":" + std::to_string(line_no) + ": unknown split tag " + tag);
      }
    }
    ds.examples.push_back(std::move(ex));
  }
  ds.train_idx = pinned_train;
  ds.val_idx = pinned_val;
  if (pinned_train.empty() && pinned_val.empty()) {
    split_train_val(ds, cfg.train_fraction, cfg.split_seed);
  }
  return ds;
}

void split_train_val(Dataset& dataset, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  std::set<size_t> test(dataset.test_idx.begin(), dataset.test_idx.end());
  std::vector<size_t> pool;
  for (size_t i = 0; i < dataset.examples.size(); ++i) {
    if (!test.count(i)) pool.push_back(i);
  }
  if (pool.size() < 2) {
    throw InvalidArgument("split requires at least 2 non-test examples, got " +
                          std::to_string(pool.size()));
  }
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(pool);
  const auto n_train = static_cast<size_t>(
      std::floor(static_cast<double>(pool.size()) * train_fraction));
  dataset.train_idx.assign(pool.begin(), pool.begin() + static_cast<long>(n_train));
  dataset.val_idx.assign(pool.begin() + static_cast<long>(n_train), pool.end());
}

std::string normalize_answer(std::string_view text) {
  std::string s = to_lower(trim(text));
  const std::string punct = ".,;:!?";
  for (;;) {
    const size_t before = s.size();
    while (!s.empty() && punct.find(s.back()) != std::string::npos) s.pop_back();
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.size() == before) break;
  }
  return s;
}

namespace {

bool parse_full_double(const std::string& text, double* out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

// -1 when the text cannot be read as an error-presence bit.
int error_flag_bit(const std::string& raw) {
  const std::string n = normalize_answer(raw);
  if (n == "1" || n == "yes" || n == "true" || n == "error") return 1;
  if (n == "0" || n == "no" || n == "false" || n == "none" || n == "correct" ||
      n == "no error" || n == "no errors") {
    return 0;
  }
  if (n.find("no error") != std::string::npos) return 0;
  if (n.find("error") != std::string::npos) return 1;
  return -1;
}

bool categorical_medcalc(const Example& ex) {
  const auto it = ex.meta.find("category");
  if (it == ex.meta.end()) return false;
  const std::string c = to_lower(trim(it->second));
  return c == "risk" || c == "severity" || c == "diagnosis";
}

}  // namespace

double score(Metric metric, const std::string& prediction, const Example& example,
             double rel_tol) {
  switch (metric) {
    case Metric::ExactMatch:
      return normalize_answer(prediction) == normalize_answer(example.target) ? 1.0 : 0.0;
    case Metric::NumericRange: {
      if (categorical_medcalc(example)) {
        return normalize_answer(prediction) == normalize_answer(example.target) ? 1.0 : 0.0;
      }
      double target = 0.0;
      if (!parse_full_double(example.target, &target)) {
        throw ConfigError("numeric_range target is not numeric for id " + example.id);
      }
      double pred = 0.0;
      if (!parse_full_double(normalize_answer(prediction), &pred)) return 0.0;
      return std::fabs(pred - target) <= rel_tol * std::fabs(target) ? 1.0 : 0.0;
    }
    case Metric::BinaryErrorFlag: {
      const int target_bit = error_flag_bit(example.target);
      if (target_bit < 0) {
        throw ConfigError("binary_error_flag target is not a flag for id " + example.id);
      }
      return error_flag_bit(prediction) == target_bit ? 1.0 : 0.0;
    }
  }
  throw InvalidArgument("unknown metric");
}

}  // namespace plab
