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
// lsrec command line: prepare / train / eval / recommend / inspect-config.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "lsrec/checkpoint.hpp"
#include "lsrec/dataset.hpp"
#include "lsrec/evaluator.hpp"
#include "lsrec/promptgen.hpp"
#include "lsrec/runconfig.hpp"
#include "lsrec/trainer.hpp"

namespace fs = std::filesystem;
using namespace lsrec;

namespace {

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) {
    if (const char* env = std::getenv("LSREC_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

RunConfig config_from(const std::optional<std::string>& path) {
  return path ? load_run_config(*path) : RunConfig{};
}

void print_prepare_summary(const Corpus& corpus, int64_t users_seen) {
  const int64_t kept = static_cast<int64_t>(corpus.sequences.size());
  std::cout << "users kept: " << kept << " (dropped "
            << users_seen - kept << " with < " << kMinSequenceLength
            << " interactions)\n";
  std::cout << "movies: " << corpus.movies.size()
            << ", genres: " << corpus.vocab.genre_count()
            << ", vocabulary size: " << corpus.vocab.size() << "\n";
  // Sequence length histogram.
  const std::vector<std::pair<int, int>> buckets = {
      {5, 9}, {10, 19}, {20, 49}, {50, 99}, {100, 199}, {200, 200}};
  std::cout << "sequence lengths:\n";
  for (const auto& [lo, hi] : buckets) {
    int64_t n = 0;
    for (const auto& s : corpus.sequences) {
      if (s.length() >= lo && s.length() <= hi) ++n;
    }
    std::cout << "  " << lo << (lo == hi ? "" : str_cat("-", hi)) << ": " << n
              << "\n";
  }
}

int cmd_prepare(const std::string& ratings_path,
                const std::string& movies_path, const std::string& out_path) {
  std::ifstream ratings_in(ratings_path);
  LSREC_CHECK(ratings_in.good(), "cannot open ratings file '", ratings_path,
              "'");
  std::ifstream movies_in(movies_path);
  LSREC_CHECK(movies_in.good(), "cannot open movies file '", movies_path,
              "'");

  std::vector<RawInteraction> interactions;
  try {
    interactions = parse_ratings(ratings_in);
  } catch (const ParseError& e) {
    fail(str_cat(ratings_path, ": ", e.what()));
  }
  std::vector<MovieRecord> movies;
  try {
    movies = parse_movies(movies_in);
  } catch (const ParseError& e) {
    fail(str_cat(movies_path, ": ", e.what()));
  }

  std::set<int64_t> users;
  for (const auto& r : interactions) users.insert(r.user_id);

  // Build everything before touching the output path, so a failed run
  // leaves no partial corpus behind.
  const Corpus corpus = build_corpus(interactions, movies);
  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  save_corpus(corpus, out_path);
  std::cout << "corpus written to " << out_path << "\n";
  print_prepare_summary(corpus, static_cast<int64_t>(users.size()));
  return 0;
}

int cmd_train(const RunConfig& config, bool force) {
  config.validate();
  apply_threads(config.threads);
  const RunConfig effective = config.effective();

  const fs::path out_dir = effective.out_dir;
  const fs::path ckpt_path = out_dir / "checkpoints" / "best.ckpt";
  if (fs::exists(ckpt_path) && !force) {
    fail(str_cat("output checkpoint ", ckpt_path.string(),
                 " already exists; re-run with --force to overwrite "
                 "(resume is not supported)"));
  }

  const Corpus corpus = load_corpus(effective.resolved_corpus_path());
  const ModelConfig model_config =
      effective.model_config(corpus.vocab.size());

  fs::create_directories(out_dir / "checkpoints");
  fs::create_directories(out_dir / "logs");
  {
    std::ofstream cfg_out(out_dir / "logs" / "effective.cfg");
    cfg_out << serialize_run_config(effective);
  }

  std::ofstream log_out(out_dir / "logs" / "train.log");
  TrainOptions train_opts = effective.train_options();
  train_opts.log_stream = &log_out;

  std::cout << "training " << effective.preset << " ("
            << parameter_count(model_config) << " parameters, "
            << (train_opts.multi_task ? "multi" : "single") << "-task, "
            << corpus.sequences.size() << " users, "
            << (train_opts.multi_task ? 5 : 1) * corpus.sequences.size()
            << " examples/epoch)\n";

  TrainResult result = train(corpus, model_config, train_opts);

  TrainStateMeta state;
  state.epoch = result.best_epoch;
  state.best_val_loss = static_cast<float>(result.best_val_loss);
  save_checkpoint(ckpt_path.string(), model_config, result.params,
                  corpus.vocab.hash(), state);
  std::cout << "best epoch " << result.best_epoch << " (val loss "
            << result.best_val_loss << "), checkpoint written to "
            << ckpt_path.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& corpus_path,
             const RunConfig& config) {
  apply_threads(config.threads);
  const Corpus corpus = load_corpus(corpus_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const MetricsReport report = evaluate(corpus, ckpt, config.eval_options());

  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir / "reports");
  const std::string stem = str_cat("metrics_", report.split);
  {
    std::ofstream json_out(out_dir / "reports" / (stem + ".json"));
    json_out << report_json(report);
  }
  {
    std::ofstream txt_out(out_dir / "reports" / (stem + ".txt"));
    txt_out << report_table(report);
  }
  std::cout << report_table(report);
  std::cout << "reports written to "
            << (out_dir / "reports" / (stem + ".json")).string() << " and .txt\n";
  return 0;
}

int cmd_recommend(const std::string& ckpt_path,
                  const std::string& corpus_path, int64_t user_id, int k) {
  const Corpus corpus = load_corpus(corpus_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  require_vocab_match(ckpt, corpus.vocab);

  const InteractionSequence* seq = corpus.find_user(user_id);
  LSREC_CHECK(seq != nullptr, "user ", user_id, " not found in corpus");

  const RankedList list = rank_for_user(corpus, *seq, ckpt.config,
                                        ckpt.params, k,
                                        seq->test_target_index);
  // Re-derive the scores for display.
  const auto prompt = make_eval_prompt(corpus, *seq, seq->test_target_index,
                                       ckpt.config.context_length);
  NoGradGuard no_grad;
  auto logits = forward_sequence(ckpt.config, ckpt.params, prompt, false, 0);
  const float* row = logits.data().data() +
                     static_cast<int64_t>(prompt.size() - 1) *
                         ckpt.config.vocab_size;

  std::cout << "top " << list.tokens.size() << " for user " << user_id
            << " (history length " << seq->test_target_index << "):\n";
  for (size_t i = 0; i < list.tokens.size(); ++i) {
    const int32_t token = list.tokens[i];
    const auto& movie = corpus.movie_by_id(corpus.vocab.movie_id_of(token));
    std::printf("%3zu. %-60s logit %.4f\n", i + 1, movie.title.c_str(),
                static_cast<double>(row[token]));
  }
  return 0;
}

int cmd_inspect_config(const RunConfig& config) {
  std::cout << serialize_run_config(config.effective());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSRec: item-token sequential recommender"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  bool force = false;

  auto* prepare = app.add_subcommand(
      "prepare", "Build a corpus file from MovieLens-format data");
  std::string ratings_path, movies_path, prepare_out;
  prepare->add_option("--ratings", ratings_path, "ratings.dat path")
      ->required();
  prepare->add_option("--movies", movies_path, "movies.dat path")->required();
  prepare->add_option("--out", prepare_out, "output corpus path")->required();

  auto* train_cmd =
      app.add_subcommand("train", "Run supervised fine-tuning");
  train_cmd->add_option("--config", config_path, "run config file");
  train_cmd->add_flag("--force", force, "overwrite an existing checkpoint");
  std::optional<std::string> preset_flag, tasks_flag, corpus_flag, out_flag;
  std::optional<uint64_t> seed_flag;
  std::optional<double> lr_flag;
  std::optional<int> epochs_flag, patience_flag, rows_flag, threads_flag;
  train_cmd->add_option("--preset", preset_flag, "small|medium|large");
  train_cmd->add_option("--tasks", tasks_flag, "single|multi");
  train_cmd->add_option("--seed", seed_flag, "training seed");
  train_cmd->add_option("--lr", lr_flag, "learning rate");
  train_cmd->add_option("--max-epochs", epochs_flag, "epoch cap");
  train_cmd->add_option("--patience", patience_flag, "early stop patience");
  train_cmd->add_option("--batch-rows", rows_flag, "packed rows per batch");
  train_cmd->add_option("--corpus", corpus_flag, "corpus file");
  train_cmd->add_option("--out-dir", out_flag, "output directory");
  train_cmd->add_option("--threads", threads_flag, "worker thread count");

  auto* eval_cmd = app.add_subcommand("eval", "Rank and report metrics");
  std::string eval_ckpt, eval_corpus;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")
      ->required();
  eval_cmd->add_option("--corpus", eval_corpus, "corpus file")->required();
  std::optional<std::string> split_flag, ks_flag;
  std::optional<int64_t> sample_flag;
  std::optional<uint64_t> eval_seed_flag;
  eval_cmd->add_option("--config", config_path, "run config file");
  eval_cmd->add_option("--split", split_flag, "val|test");
  eval_cmd->add_option("--ks", ks_flag, "comma-separated K list");
  eval_cmd->add_option("--sample-users", sample_flag,
                       "evaluate a seeded uniform user sample");
  eval_cmd->add_option("--seed", eval_seed_flag, "sampling seed");
  eval_cmd->add_option("--out-dir", out_flag, "output directory");
  eval_cmd->add_option("--threads", threads_flag, "worker thread count");

  auto* rec_cmd =
      app.add_subcommand("recommend", "Print top-K titles for one user");
  std::string rec_ckpt, rec_corpus;
  int64_t rec_user = 0;
  int rec_k = 10;
  rec_cmd->add_option("--checkpoint", rec_ckpt, "checkpoint file")
      ->required();
  rec_cmd->add_option("--corpus", rec_corpus, "corpus file")->required();
  rec_cmd->add_option("--user", rec_user, "user id")->required();
  rec_cmd->add_option("--k", rec_k, "list length");

  auto* inspect = app.add_subcommand(
      "inspect-config", "Print the effective configuration");
  inspect->add_option("--config", config_path, "run config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (prepare->parsed()) {
      return cmd_prepare(ratings_path, movies_path, prepare_out);
    }
    RunConfig config = config_from(config_path);
    if (preset_flag) config.preset = *preset_flag;
    if (tasks_flag) config.tasks = *tasks_flag;
    if (seed_flag) config.seed = *seed_flag;
    if (lr_flag) config.lr = *lr_flag;
    if (epochs_flag) config.max_epochs = *epochs_flag;
    if (patience_flag) config.patience = *patience_flag;
    if (rows_flag) config.batch_rows = *rows_flag;
    if (corpus_flag) config.corpus_path = *corpus_flag;
    if (out_flag) config.out_dir = *out_flag;
    if (threads_flag) config.threads = *threads_flag;
    if (split_flag) config.eval_split = *split_flag;
    if (ks_flag) {
      std::vector<int> ks;
      std::stringstream ss(*ks_flag);
      std::string item;
      while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
      config.eval_ks = ks;
    }
    if (sample_flag) config.eval_sample_users = *sample_flag;
    if (eval_seed_flag) config.eval_seed = *eval_seed_flag;
    config.validate();

    if (train_cmd->parsed()) return cmd_train(config, force);
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_corpus, config);
    if (rec_cmd->parsed()) {
      return cmd_recommend(rec_ckpt, rec_corpus, rec_user, rec_k);
    }
    if (inspect->parsed()) return cmd_inspect_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
