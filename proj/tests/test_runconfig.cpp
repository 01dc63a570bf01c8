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
#include <sstream>

#include <doctest.h>

#include "lsrec/runconfig.hpp"

using namespace lsrec;

TEST_CASE("defaults are valid and documented") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.preset == "small");
  CHECK(c.tasks == "single");
  CHECK(c.max_epochs == 100);
  CHECK(c.patience == 20);
  CHECK(c.eval_ks == std::vector<int>{1, 5, 10, 20});
  CHECK(c.resolved_corpus_path() == "out/corpus/corpus.bin");
}

TEST_CASE("parsing keys, comments, and values") {
  std::stringstream in(
      "# a comment\n"
      "model.preset = medium\n"
      "train.tasks = multi\n"
      "train.seed = 9\n"
      "train.lr = 0.002\n"
      "eval.ks = 1, 5, 10\n"
      "eval.sample_users = 1000\n"
      "\n"
      "out.dir = runs/exp1\n");
  const auto c = parse_run_config(in, "test");
  CHECK(c.preset == "medium");
  CHECK(c.multi_task());
  CHECK(c.seed == 9);
  CHECK(c.lr == 0.002);
  CHECK(c.eval_ks == std::vector<int>{1, 5, 10});
  CHECK(c.eval_sample_users == 1000);
  CHECK(c.out_dir == "runs/exp1");
  CHECK(c.resolved_corpus_path() == "runs/exp1/corpus/corpus.bin");
}

TEST_CASE("unknown and duplicate keys are hard errors") {
  std::stringstream unknown("model.hiden_dims = 32\n");
  CHECK_THROWS(parse_run_config(unknown, "test"));

  std::stringstream dup("train.seed = 1\ntrain.seed = 2\n");
  CHECK_THROWS(parse_run_config(dup, "test"));

  std::stringstream junk("not a key value line\n");
  CHECK_THROWS(parse_run_config(junk, "test"));

  std::stringstream bad_enum("train.tasks = both\n");
  CHECK_THROWS(parse_run_config(bad_enum, "test"));
}

TEST_CASE("effective config round-trips to an equal RunConfig") {
  std::stringstream in(
      "model.preset = large\n"
      "model.attn_dropout = 0.1\n"
      "train.tasks = multi\n"
      "train.lr = 0.0005\n");
  const auto c = parse_run_config(in, "test");
  const auto effective = c.effective();

  // all model fields materialized
  CHECK(effective.hidden_dims.has_value());
  CHECK(*effective.hidden_dims == 384);
  CHECK(*effective.layers == 4);
  CHECK(*effective.attn_dropout == 0.1);
  CHECK(!effective.corpus_path.empty());

  const std::string text = serialize_run_config(effective);
  std::stringstream back(text);
  const auto reloaded = parse_run_config(back, "roundtrip");
  CHECK(reloaded == effective);

  // and serialization is stable
  CHECK(serialize_run_config(reloaded) == text);
}

TEST_CASE("model_config applies preset then overrides") {
  std::stringstream in(
      "model.preset = small\n"
      "model.layers = 3\n"
      "model.attn_dropout = 0\n");
  const auto c = parse_run_config(in, "test");
  const auto mc = c.model_config(500);
  CHECK(mc.hidden_dims == 64);
  CHECK(mc.layers == 3);
  CHECK(mc.attn_dropout == 0.0f);
  CHECK(mc.vocab_size == 500);
  CHECK(mc.context_length == 200);
}

TEST_CASE("train and eval option mapping") {
  std::stringstream in(
      "train.tasks = multi\n"
      "train.patience = 7\n"
      "train.loss_mask = full\n"
      "eval.split = val\n"
      "eval.sample_users = all\n");
  const auto c = parse_run_config(in, "test");
  const auto t = c.train_options();
  CHECK(t.multi_task);
  CHECK(t.patience == 7);
  CHECK(t.loss_mask_mode == LossMaskMode::kFullSequence);
  const auto e = c.eval_options();
  CHECK(e.split == Split::kVal);
  CHECK(e.sample_users == 0);
}
