#pragma once

// Independent reference implementations the production code is checked against.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "nlim/evaluation.hpp"
#include "nlim/interpreter.hpp"

namespace nlim::test {

// Full (n+1) x (m+1) table, filled from the recurrence definition.
inline std::size_t oracle_distance(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = std::tolower(static_cast<unsigned char>(a[i - 1])) ==
                        std::tolower(static_cast<unsigned char>(b[j - 1]));
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (same ? 0 : 1)});
    }
  }
  return d[n][m];
}

inline FuzzyMatch oracle_match(const std::string& word, const std::vector<std::string>& cands) {
  FuzzyMatch best{"", static_cast<std::size_t>(-1)};
  for (const auto& c : cands) {
    const auto d = oracle_distance(word, c);
    if (d < best.distance || (d == best.distance && c < best.name)) best = {c, d};
  }
  return best;
}

inline double log_prob_of(const Eigen::Ref<const Vector>& logits, int k) {
  double mx = logits(0);
  for (int i = 1; i < logits.size(); ++i) mx = std::max(mx, logits(i));
  double z = 0.0;
  for (int i = 0; i < logits.size(); ++i) z += std::exp(logits(i) - mx);
  return logits(k) - mx - std::log(z);
}

// Scores one sentence at a time through its own batch of one and counts by hand.
inline Metrics recount(const ParamStore& params, const ArchSpec& arch, const std::vector<LabeledSentence>& data) {
  double ihits = 0, iloss = 0, thits = 0, tloss = 0, fhits = 0, positions = 0;
  for (const auto& s : data) {
    const std::vector<LabeledSentence> one{s};
    const Batch b = make_batch(one);
    const BatchOutputs out = forward_outputs(params, arch, b);
    if (has_intent_head(arch.kind)) {
      int best = 0;
      for (int k = 1; k < kIntentDim; ++k) {
        if (out.intent_logits(k, 0) > out.intent_logits(best, 0)) best = k;
      }
      ihits += best == static_cast<int>(s.intent);
      iloss -= log_prob_of(out.intent_logits.col(0), static_cast<int>(s.intent));
    }
    if (has_tag_head(arch.kind)) {
      std::vector<int> gold;
      for (Tag t : s.tags) gold.push_back(static_cast<int>(t));
      if (is_seq2seq(arch.kind)) gold.push_back(static_cast<int>(Tag::End));
      const Prediction p = predict(params, arch, s.text);
      std::vector<int> free;
      for (Tag t : p.tags) free.push_back(static_cast<int>(t));
      if (p.halted_by == HaltedBy::EndToken) free.push_back(static_cast<int>(Tag::End));
      for (std::size_t j = 0; j < gold.size(); ++j) {
        const auto col = out.tag_logits[j].col(0);
        int best = -1;
        for (int k = 0; k < kTagDim; ++k) {
          if (k == static_cast<int>(Tag::Start)) continue;
          if (!is_seq2seq(arch.kind) && k == static_cast<int>(Tag::End)) continue;
          if (best < 0 || col(k) > col(best)) best = k;
        }
        thits += best == gold[j];
        fhits += j < free.size() && free[j] == gold[j];
        tloss -= log_prob_of(col, gold[j]);
      }
      positions += static_cast<double>(gold.size());
    }
  }
  const double n = static_cast<double>(data.size());
  Metrics m;
  m.examples = data.size();
  if (has_intent_head(arch.kind)) {
    m.intent_accuracy = ihits / n;
    m.intent_loss = iloss / n;
  }
  if (has_tag_head(arch.kind)) {
    m.tag_accuracy = thits / positions;
    m.tag_loss = tloss / positions;
    m.free_running_tag_accuracy = fhits / positions;
    m.tag_positions = static_cast<std::size_t>(positions);
  }
  return m;
}

}  // namespace nlim::test
