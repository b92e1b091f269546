#include "comix/segmenter.hpp"

#include <algorithm>

#include "comix/defaults.hpp"
#include "comix/text.hpp"

using nlohmann::json;

namespace comix::segmenter {

namespace {

std::vector<std::vector<std::string>> parse_marker_list(const json& j) {
  std::vector<std::vector<std::string>> out;
  for (const auto& entry : j) {
    auto tokens = comix::tokenize(entry.get<std::string>());
    if (tokens.empty()) throw std::runtime_error("empty grammar marker");
    out.push_back(std::move(tokens));
  }
  return out;
}

bool is_punct_token(const std::string& t) {
  return t.size() == 1 && (t[0] == ',' || t[0] == ';' || t[0] == '?' ||
                           t[0] == '!' || t[0] == '.' || t[0] == '\'');
}

using TokenRange = std::pair<int, int>;  // [lo, hi) into the token list

struct Group {
  TokenRange range;
  bool is_marker = false;
};

bool matches_at(const std::vector<Token>& tokens, int pos,
                const std::vector<std::string>& marker) {
  if (pos + static_cast<int>(marker.size()) > static_cast<int>(tokens.size()))
    return false;
  for (size_t i = 0; i < marker.size(); ++i)
    if (tokens[pos + i].text != marker[i]) return false;
  return true;
}

bool side_has_action(const Grammar& g, const std::vector<Token>& tokens,
                     int lo, int hi) {
  for (int i = lo; i < hi; ++i)
    if (g.and_action_words.count(tokens[i].text)) return true;
  return false;
}

// Recursive marker/and splitting of one ';'-free range.
void split_range(const Grammar& g, const std::vector<Token>& tokens,
                 TokenRange range, std::vector<Group>& out) {
  const auto [lo, hi] = range;
  if (lo >= hi) return;

  for (const auto& marker : g.split_markers) {
    for (int pos = lo; pos + static_cast<int>(marker.size()) <= hi; ++pos) {
      if (!matches_at(tokens, pos, marker)) continue;
      split_range(g, tokens, {lo, pos}, out);
      out.push_back({{pos, pos + static_cast<int>(marker.size())}, true});
      split_range(g, tokens, {pos + static_cast<int>(marker.size()), hi}, out);
      return;
    }
  }

  // Bare "and": only when both sides contain an action word.
  for (int pos = lo; pos < hi; ++pos) {
    if (tokens[pos].text != "and") continue;
    if (!side_has_action(g, tokens, lo, pos) ||
        !side_has_action(g, tokens, pos + 1, hi))
      continue;
    split_range(g, tokens, {lo, pos}, out);
    out.push_back({{pos, pos + 1}, true});
    split_range(g, tokens, {pos + 1, hi}, out);
    return;
  }

  out.push_back({range, false});
}

std::vector<std::string> strip_tokens(const Grammar& g,
                                      std::vector<std::string> tokens) {
  size_t lo = 0, hi = tokens.size();
  bool changed = true;
  while (changed && lo < hi) {
    changed = false;
    while (lo < hi && is_punct_token(tokens[lo])) {
      ++lo;
      changed = true;
    }
    while (lo < hi && is_punct_token(tokens[hi - 1])) {
      --hi;
      changed = true;
    }
    for (const auto& prefix : g.strip_prefixes) {
      if (hi - lo < prefix.size()) continue;
      if (std::equal(prefix.begin(), prefix.end(), tokens.begin() + lo)) {
        lo += prefix.size();
        changed = true;
        break;
      }
    }
    for (const auto& suffix : g.strip_suffixes) {
      if (hi - lo < suffix.size()) continue;
      if (std::equal(suffix.begin(), suffix.end(),
                     tokens.begin() + (hi - suffix.size()))) {
        hi -= suffix.size();
        changed = true;
        break;
      }
    }
  }
  return {tokens.begin() + lo, tokens.begin() + hi};
}

}  // namespace

Grammar load_grammar(const json& config) {
  Grammar g;
  g.split_markers = parse_marker_list(config.at("split_markers"));
  for (const auto& w : config.at("and_action_words"))
    g.and_action_words.insert(w.get<std::string>());
  g.strip_prefixes = parse_marker_list(config.at("strip_prefixes"));
  g.strip_suffixes = parse_marker_list(config.at("strip_suffixes"));
  g.min_clause_tokens = config.value("min_clause_tokens", 2);
  if (g.min_clause_tokens < 1)
    throw std::runtime_error("min_clause_tokens must be >= 1");
  return g;
}

Grammar builtin_grammar() {
  return load_grammar(json::parse(builtin_grammar_json()));
}

std::string strip_wrappers(const Grammar& g, const std::string& clause_text) {
  return comix::join_tokens(strip_tokens(g, comix::tokenize(clause_text)));
}

Segmentation segment(const Grammar& g, const std::string& text) {
  Segmentation seg;
  const auto tokens = tokenize_with_offsets(text);
  if (tokens.empty()) return seg;

  // Rule 1: cut at ';', then marker/and rules within each piece.
  std::vector<Group> groups;
  int lo = 0;
  for (int i = 0; i <= static_cast<int>(tokens.size()); ++i) {
    if (i < static_cast<int>(tokens.size()) && tokens[i].text != ";") continue;
    split_range(g, tokens, {lo, i}, groups);
    if (i < static_cast<int>(tokens.size()))
      groups.push_back({{i, i + 1}, true});
    lo = i + 1;
  }

  std::vector<TokenRange> clauses;
  for (const auto& grp : groups) {
    if (grp.is_marker) {
      seg.removed.push_back({tokens[grp.range.first].begin,
                             tokens[grp.range.second - 1].end});
      continue;
    }
    if (grp.range.second <= grp.range.first) continue;
    const int len = grp.range.second - grp.range.first;
    if (len < g.min_clause_tokens && !clauses.empty())
      clauses.back().second = grp.range.second;  // merge into preceding clause
    else
      clauses.push_back(grp.range);
  }
  // A short leading fragment has no preceding clause; fold it forward.
  while (clauses.size() >= 2 &&
         clauses[0].second - clauses[0].first < g.min_clause_tokens) {
    clauses[1].first = clauses[0].first;
    clauses.erase(clauses.begin());
  }

  for (const auto& [clo, chi] : clauses) {
    const corpus::Span span{tokens[clo].begin, tokens[chi - 1].end};
    std::vector<std::string> words;
    for (int i = clo; i < chi; ++i) words.push_back(tokens[i].text);
    const std::string stripped = comix::join_tokens(strip_tokens(g, words));
    if (stripped.empty()) {
      seg.removed.push_back(span);  // politeness-only fragment, dropped
      continue;
    }
    seg.spans.push_back(span);
    seg.stripped.push_back(stripped);
  }

  if (seg.spans.empty()) {
    // Fallback: one span over the whole token range.
    const corpus::Span span{tokens.front().begin, tokens.back().end};
    std::string stripped = strip_wrappers(g, text);
    if (stripped.empty()) stripped = comix::join_tokens(comix::tokenize(text));
    seg.spans.push_back(span);
    seg.stripped.push_back(stripped);
    seg.removed.clear();
  }
  return seg;
}

QualityReport segmentation_quality(const Grammar& g,
                                   const std::vector<corpus::Example>& examples) {
  QualityReport report;
  if (examples.empty()) return report;
  double f1_sum = 0.0;
  int count_ok = 0;
  for (const auto& e : examples) {
    const Segmentation seg = segment(g, e.text);
    if (seg.spans.size() == e.clause_spans.size()) ++count_ok;

    const auto tokens = tokenize_with_offsets(e.text);
    auto covered = [&](const std::vector<corpus::Span>& spans, const Token& t) {
      for (const auto& s : spans)
        if (t.begin >= s.begin && t.end <= s.end) return true;
      return false;
    };
    int pred = 0, gold = 0, both = 0;
    for (const auto& t : tokens) {
      const bool p = covered(seg.spans, t);
      const bool q = covered(e.clause_spans, t);
      pred += p;
      gold += q;
      both += p && q;
    }
    f1_sum += (pred + gold == 0) ? 1.0 : 2.0 * both / (pred + gold);
  }
  report.n = static_cast<int>(examples.size());
  report.span_count_accuracy = static_cast<double>(count_ok) / report.n;
  report.boundary_f1 = f1_sum / report.n;
  return report;
}

}  // namespace comix::segmenter
