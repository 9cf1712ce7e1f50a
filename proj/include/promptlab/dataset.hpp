#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace plab {

enum class Metric { ExactMatch, NumericRange, BinaryErrorFlag };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);  // throws ConfigError

struct Example {
  std::string id;
  std::string input;
  std::string target;
  std::map<std::string, std::string> meta;
};

enum class SplitTag { Train, Val, Test };
const char* split_name(SplitTag tag);

struct DatasetConfig {
  Metric metric = Metric::ExactMatch;
  double rel_tol = 0.05;  // numeric within-range tolerance (not paper-fixed)
  double train_fraction = 0.9;
  uint64_t split_seed = 0;
};

struct Dataset;

// Read-only view of one split; optimizers must never receive a Test view.
struct SplitView {
  const Dataset* dataset = nullptr;
  SplitTag tag = SplitTag::Train;
  std::vector<const Example*> items;
  size_t size() const { return items.size(); }
};

struct Dataset {
  std::string name;
  std::vector<Example> examples;
  Metric metric = Metric::ExactMatch;
  double rel_tol = 0.05;
  // Disjoint index partition. Explicitly tagged lines are pinned; the
  // remaining pool is divided by split_train_val.
  std::vector<size_t> train_idx, val_idx, test_idx;

  SplitView train() const;
  SplitView val() const;
  SplitView test() const;
  SplitView view(SplitTag tag) const;
};

// JSON Lines loader: one object per line with id/input/target[/meta][/split].
// Duplicate ids, empty targets, and malformed lines raise ParseError with the
// offending line number or id. Untagged examples are partitioned by the
// config's train_fraction and split_seed.
Dataset load_dataset(const std::string& path, const DatasetConfig& cfg,
                     const std::string& name = "");

// Seeded shuffle of the untagged pool; first floor(n * train_fraction) to
// train, rest to val. Idempotent for equal (dataset, fraction, seed).
void split_train_val(Dataset& dataset, double train_fraction, uint64_t seed);

// Canonical answer normalization: trim, ASCII casefold, strip terminal
// punctuation (.,;:!?).
std::string normalize_answer(std::string_view text);

// Per-item metric in [0, 1]. NumericRange falls back to exact match for
// risk/severity/diagnosis categories; non-numeric predictions score 0 while
// non-numeric targets are a configuration error.
double score(Metric metric, const std::string& prediction, const Example& example,
             double rel_tol = 0.05);

}  // namespace plab
