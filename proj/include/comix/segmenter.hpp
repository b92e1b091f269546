#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "comix/corpus.hpp"

#include "json.hpp"

namespace comix::segmenter {

// Rule-based clause splitter. Rules run in order: split at ';', split at the
// listed connective markers, split at bare "and" when both sides contain an
// action word. Marker patterns are literal token sequences.
struct Grammar {
  std::vector<std::vector<std::string>> split_markers;
  std::unordered_set<std::string> and_action_words;
  std::vector<std::vector<std::string>> strip_prefixes;
  std::vector<std::vector<std::string>> strip_suffixes;
  int min_clause_tokens = 2;
};

Grammar load_grammar(const nlohmann::json& config);
Grammar builtin_grammar();

struct Segmentation {
  std::vector<corpus::Span> spans;        // clause material, marker tokens excluded
  std::vector<std::string> stripped;      // per-span text after wrapper stripping
  std::vector<corpus::Span> removed;      // marker/separator regions, for accounting
};

Segmentation segment(const Grammar& g, const std::string& text);

// Greedily removes politeness/scaffold prefixes and suffixes plus edge
// punctuation. Idempotent.
std::string strip_wrappers(const Grammar& g, const std::string& clause_text);

struct QualityReport {
  double span_count_accuracy = 0;
  double boundary_f1 = 0;  // token-level agreement with gold spans
  int n = 0;
};

QualityReport segmentation_quality(const Grammar& g,
                                   const std::vector<corpus::Example>& examples);

}  // namespace comix::segmenter
