/* Copyright 2026 The LSRec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "lsrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_set>

#include "lsrec/promptgen.hpp"

namespace lsrec {

const char* split_name(Split split) {
  return split == Split::kVal ? "val" : "test";
}

RankedList rank_for_user(const Corpus& corpus, const InteractionSequence& seq,
                         const ModelConfig& config, const Parameters& params,
                         int k_max, int target_index) {
  LSREC_CHECK(k_max >= 1, "k_max must be >= 1");
  const Vocabulary& vocab = corpus.vocab;

  NoGradGuard no_grad;
  const auto prompt =
      make_eval_prompt(corpus, seq, target_index, config.context_length);
  auto logits = forward_sequence(config, params, prompt, false, 0);
  // Next-token distribution lives at the prompt's final position (START).
  const float* row =
      logits.data().data() +
      static_cast<int64_t>(prompt.size() - 1) * config.vocab_size;

  // Exclude every item strictly before the target.
  std::unordered_set<int32_t> history;
  history.reserve(static_cast<size_t>(target_index));
  for (int i = 0; i < target_index; ++i) {
    history.insert(
        vocab.movie_token(seq.items[static_cast<size_t>(i)].movie_id));
  }
  const int32_t target_token =
      vocab.movie_token(seq.items[static_cast<size_t>(target_index)].movie_id);

  RankedList out;
  out.user_id = seq.user_id;
  out.target_token = target_token;

  const int32_t begin = vocab.movie_begin();
  const int32_t end = begin + vocab.movie_count();
  const bool target_eligible = history.count(target_token) == 0;

  std::vector<int32_t> candidates;
  candidates.reserve(static_cast<size_t>(end - begin));
  for (int32_t id = begin; id < end; ++id) {
    if (history.count(id)) continue;
    candidates.push_back(id);
  }
  const auto better = [row](int32_t a, int32_t b) {
    const float la = row[a];
    const float lb = row[b];
    if (la != lb) return la > lb;
    return a < b;
  };
  const size_t top_n =
      std::min(static_cast<size_t>(k_max), candidates.size());
  std::partial_sort(candidates.begin(),
                    candidates.begin() + static_cast<ptrdiff_t>(top_n),
                    candidates.end(), better);
  out.tokens.assign(candidates.begin(),
                    candidates.begin() + static_cast<ptrdiff_t>(top_n));

  if (target_eligible) {
    // Exact 1-based rank among eligible candidates.
    int rank = 1;
    const float lt = row[target_token];
    for (int32_t id = begin; id < end; ++id) {
      if (id == target_token || history.count(id)) continue;
      const float l = row[id];
      if (l > lt || (l == lt && id < target_token)) ++rank;
    }
    out.target_rank = rank;
  } else {
    out.target_rank = RankedList::kAbsent;
  }
  return out;
}

double hit_rate(std::span<const RankedList> lists, int k) {
  LSREC_CHECK(!lists.empty(), "hit_rate over an empty population");
  int64_t hits = 0;
  for (const auto& l : lists) {
    if (l.target_rank != RankedList::kAbsent && l.target_rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(lists.size());
}

double ndcg(std::span<const RankedList> lists, int k) {
  LSREC_CHECK(!lists.empty(), "ndcg over an empty population");
  double total = 0.0;
  for (const auto& l : lists) {
    if (l.target_rank != RankedList::kAbsent && l.target_rank <= k) {
      total += 1.0 / std::log2(1.0 + static_cast<double>(l.target_rank));
    }
  }
  return total / static_cast<double>(lists.size());
}

double diversity(std::span<const RankedList> lists, int k,
                 const Vocabulary& vocab) {
  LSREC_CHECK(!lists.empty(), "diversity over an empty population");
  LSREC_CHECK(vocab.movie_count() > 0, "vocabulary has no movie tokens");
  std::unordered_set<int32_t> unique;
  for (const auto& l : lists) {
    const size_t n = std::min(static_cast<size_t>(k), l.tokens.size());
    unique.insert(l.tokens.begin(),
                  l.tokens.begin() + static_cast<ptrdiff_t>(n));
  }
  return static_cast<double>(unique.size()) /
         static_cast<double>(vocab.movie_count());
}

MetricsReport evaluate(const Corpus& corpus, const ModelConfig& config,
                       const Parameters& params, const EvalOptions& options) {
  LSREC_CHECK(!options.ks.empty(), "no K values requested");
  LSREC_CHECK(!corpus.sequences.empty(), "corpus has no sequences");
  int k_max = 0;
  for (int k : options.ks) {
    LSREC_CHECK(k >= 1, "K must be >= 1");
    k_max = std::max(k_max, k);
  }

  // Uniform sample without replacement, seeded; population kept in user-id
  // order so aggregation is deterministic.
  const int64_t n_users = static_cast<int64_t>(corpus.sequences.size());
  std::vector<int64_t> selected(static_cast<size_t>(n_users));
  for (int64_t i = 0; i < n_users; ++i) selected[static_cast<size_t>(i)] = i;
  if (options.sample_users > 0 && options.sample_users < n_users) {
    std::mt19937_64 rng(options.seed);
    for (int64_t i = 0; i < options.sample_users; ++i) {
      const int64_t j =
          i + static_cast<int64_t>(rng() % static_cast<uint64_t>(n_users - i));
      std::swap(selected[static_cast<size_t>(i)],
                selected[static_cast<size_t>(j)]);
    }
    selected.resize(static_cast<size_t>(options.sample_users));
    std::sort(selected.begin(), selected.end());
  }

  std::vector<RankedList> lists(selected.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int64_t i = 0; i < static_cast<int64_t>(selected.size()); ++i) {
    const auto& seq =
        corpus.sequences[static_cast<size_t>(selected[static_cast<size_t>(i)])];
    const int target_index = options.split == Split::kVal
                                 ? seq.val_target_index
                                 : seq.test_target_index;
    lists[static_cast<size_t>(i)] =
        rank_for_user(corpus, seq, config, params, k_max, target_index);
  }

  MetricsReport report;
  report.population = static_cast<int64_t>(lists.size());
  report.split = split_name(options.split);
  report.sample_users = options.sample_users;
  report.seed = options.seed;
  report.vocab_hash = corpus.vocab.hash();
  for (int k : options.ks) {
    MetricRow row;
    row.k = k;
    row.hr = hit_rate(lists, k);
    row.ndcg = ndcg(lists, k);
    row.div = diversity(lists, k, corpus.vocab);
    report.rows.push_back(row);
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const MetricRow& a, const MetricRow& b) { return a.k < b.k; });
  return report;
}

MetricsReport evaluate(const Corpus& corpus, const Checkpoint& ckpt,
                       const EvalOptions& options) {
  require_vocab_match(ckpt, corpus.vocab);
  return evaluate(corpus, ckpt.config, ckpt.params, options);
}

namespace {

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string report_json(const MetricsReport& r) {
  std::string out = "{\n";
  out += str_cat("  \"split\": \"", r.split, "\",\n");
  out += str_cat("  \"population\": ", r.population, ",\n");
  out += str_cat("  \"sample_users\": ", r.sample_users, ",\n");
  out += str_cat("  \"seed\": ", r.seed, ",\n");
  out += str_cat("  \"vocab_hash\": \"", r.vocab_hash, "\",\n");
  out += "  \"metrics\": [\n";
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    out += str_cat("    {\"k\": ", row.k, ", \"hr\": ", format_metric(row.hr),
                   ", \"ndcg\": ", format_metric(row.ndcg),
                   ", \"div\": ", format_metric(row.div), "}",
                   i + 1 < r.rows.size() ? "," : "", "\n");
  }
  out += "  ]\n}\n";
  return out;
}

std::string report_table(const MetricsReport& r) {
  std::string out;
  out += str_cat("split=", r.split, " population=", r.population);
  if (r.sample_users > 0) {
    out += str_cat(" (sampled ", r.sample_users, ", seed ", r.seed, ")");
  }
  out += "\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-6s %-10s %-10s %-10s\n", "K", "HR",
                "NDCG", "Div");
  out += line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof(line), "%-6d %-10.4f %-10.4f %-10.4f\n", row.k,
                  row.hr, row.ndcg, row.div);
    out += line;
  }
  return out;
}

}  // namespace lsrec
