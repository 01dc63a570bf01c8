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
#include "lsrec/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lsrec/common.hpp"

namespace lsrec {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  LSREC_CHECK(ec == std::errc() && ptr == end, "config key '", key,
              "': invalid value '", value, "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& value,
                                const std::string& key) {
  std::vector<int> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<int>(trim(item), key));
  }
  LSREC_CHECK(!out.empty(), "config key '", key, "': empty list");
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::string& origin) {
  RunConfig c;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;

  const auto set_opt_int = [](std::optional<int>& field) {
    return [&field](const std::string& v, const std::string& k) {
      field = parse_number<int>(v, k);
    };
  };
  const auto set_opt_double = [](std::optional<double>& field) {
    return [&field](const std::string& v, const std::string& k) {
      field = parse_number<double>(v, k);
    };
  };

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"data.ratings", [&](const std::string& v, auto&) { c.data_ratings = v; }},
      {"data.movies", [&](const std::string& v, auto&) { c.data_movies = v; }},
      {"corpus", [&](const std::string& v, auto&) { c.corpus_path = v; }},
      {"out.dir", [&](const std::string& v, auto&) { c.out_dir = v; }},
      {"model.preset", [&](const std::string& v, auto&) { c.preset = v; }},
      {"model.hidden_dims", set_opt_int(c.hidden_dims)},
      {"model.intermediate_dims", set_opt_int(c.intermediate_dims)},
      {"model.context_length", set_opt_int(c.context_length)},
      {"model.attn_heads", set_opt_int(c.attn_heads)},
      {"model.kv_heads", set_opt_int(c.kv_heads)},
      {"model.layers", set_opt_int(c.layers)},
      {"model.attn_dropout", set_opt_double(c.attn_dropout)},
      {"model.rope_theta", set_opt_double(c.rope_theta)},
      {"model.rms_eps", set_opt_double(c.rms_eps)},
      {"train.tasks", [&](const std::string& v, auto&) { c.tasks = v; }},
      {"train.seed",
       [&](const std::string& v, const std::string& k) {
         c.seed = parse_number<uint64_t>(v, k);
       }},
      {"train.lr",
       [&](const std::string& v, const std::string& k) {
         c.lr = parse_number<double>(v, k);
       }},
      {"train.batch_rows",
       [&](const std::string& v, const std::string& k) {
         c.batch_rows = parse_number<int>(v, k);
       }},
      {"train.max_epochs",
       [&](const std::string& v, const std::string& k) {
         c.max_epochs = parse_number<int>(v, k);
       }},
      {"train.patience",
       [&](const std::string& v, const std::string& k) {
         c.patience = parse_number<int>(v, k);
       }},
      {"train.warmup_steps",
       [&](const std::string& v, const std::string& k) {
         c.warmup_steps = parse_number<int>(v, k);
       }},
      {"train.beta1",
       [&](const std::string& v, const std::string& k) {
         c.beta1 = parse_number<double>(v, k);
       }},
      {"train.beta2",
       [&](const std::string& v, const std::string& k) {
         c.beta2 = parse_number<double>(v, k);
       }},
      {"train.adam_eps",
       [&](const std::string& v, const std::string& k) {
         c.adam_eps = parse_number<double>(v, k);
       }},
      {"train.weight_decay",
       [&](const std::string& v, const std::string& k) {
         c.weight_decay = parse_number<double>(v, k);
       }},
      {"train.clip_norm",
       [&](const std::string& v, const std::string& k) {
         c.clip_norm = parse_number<double>(v, k);
       }},
      {"train.loss_mask",
       [&](const std::string& v, auto&) { c.loss_mask = v; }},
      {"eval.split",
       [&](const std::string& v, auto&) { c.eval_split = v; }},
      {"eval.ks",
       [&](const std::string& v, const std::string& k) {
         c.eval_ks = parse_int_list(v, k);
       }},
      {"eval.sample_users",
       [&](const std::string& v, const std::string& k) {
         c.eval_sample_users = v == "all" ? 0 : parse_number<int64_t>(v, k);
       }},
      {"eval.seed",
       [&](const std::string& v, const std::string& k) {
         c.eval_seed = parse_number<uint64_t>(v, k);
       }},
      {"threads",
       [&](const std::string& v, const std::string& k) {
         c.threads = parse_number<int>(v, k);
       }},
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    LSREC_CHECK(eq != std::string::npos, origin, ":", line_no,
                ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = setters.find(key);
    LSREC_CHECK(it != setters.end(), origin, ":", line_no,
                ": unknown config key '", key, "'");
    LSREC_CHECK(seen.insert(key).second, origin, ":", line_no,
                ": duplicate config key '", key, "'");
    it->second(value, key);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  LSREC_CHECK(in.good(), "cannot open config file '", path, "'");
  return parse_run_config(in, path);
}

void RunConfig::validate() const {
  LSREC_CHECK(preset_from_name(preset).has_value(), "model.preset must be "
              "one of small|medium|large, got '", preset, "'");
  LSREC_CHECK(tasks == "single" || tasks == "multi",
              "train.tasks must be single|multi, got '", tasks, "'");
  LSREC_CHECK(loss_mask == "target" || loss_mask == "full",
              "train.loss_mask must be target|full, got '", loss_mask, "'");
  LSREC_CHECK(eval_split == "val" || eval_split == "test",
              "eval.split must be val|test, got '", eval_split, "'");
  LSREC_CHECK(lr > 0, "train.lr must be positive");
  LSREC_CHECK(batch_rows > 0, "train.batch_rows must be positive");
  LSREC_CHECK(max_epochs > 0, "train.max_epochs must be positive");
  LSREC_CHECK(patience >= 0, "train.patience must be >= 0");
  LSREC_CHECK(warmup_steps >= 0, "train.warmup_steps must be >= 0");
  LSREC_CHECK(eval_sample_users >= 0, "eval.sample_users must be >= 0");
  LSREC_CHECK(threads >= 0, "threads must be >= 0");
  for (int k : eval_ks) LSREC_CHECK(k >= 1, "eval.ks entries must be >= 1");
}

std::string RunConfig::resolved_corpus_path() const {
  if (!corpus_path.empty()) return corpus_path;
  return out_dir + "/corpus/corpus.bin";
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  ModelConfig mc = preset_config(*preset_from_name(preset), vocab_size);
  if (hidden_dims) mc.hidden_dims = *hidden_dims;
  if (intermediate_dims) mc.intermediate_dims = *intermediate_dims;
  if (context_length) mc.context_length = *context_length;
  if (attn_heads) mc.attn_heads = *attn_heads;
  if (kv_heads) mc.kv_heads = *kv_heads;
  if (layers) mc.layers = *layers;
  if (attn_dropout) mc.attn_dropout = static_cast<float>(*attn_dropout);
  if (rope_theta) mc.rope_theta = static_cast<float>(*rope_theta);
  if (rms_eps) mc.rms_eps = static_cast<float>(*rms_eps);
  mc.validate();
  return mc;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t;
  t.multi_task = multi_task();
  t.seed = seed;
  t.lr = static_cast<float>(lr);
  t.batch_rows = batch_rows;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.warmup_steps = warmup_steps;
  t.beta1 = static_cast<float>(beta1);
  t.beta2 = static_cast<float>(beta2);
  t.adam_eps = static_cast<float>(adam_eps);
  t.weight_decay = static_cast<float>(weight_decay);
  t.clip_norm = static_cast<float>(clip_norm);
  t.loss_mask_mode = loss_mask == "full" ? LossMaskMode::kFullSequence
                                         : LossMaskMode::kTargetOnly;
  return t;
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions e;
  e.split = eval_split == "val" ? Split::kVal : Split::kTest;
  e.ks = eval_ks;
  e.sample_users = eval_sample_users;
  e.seed = eval_seed;
  return e;
}

RunConfig RunConfig::effective() const {
  RunConfig e = *this;
  e.corpus_path = resolved_corpus_path();
  // Materialize the model fields implied by the preset; explicit overrides
  // win, exactly as in model_config().
  const ModelConfig mc = [&] {
    ModelConfig base = preset_config(*preset_from_name(preset), 1);
    base.vocab_size = 1;
    if (hidden_dims) base.hidden_dims = *hidden_dims;
    if (intermediate_dims) base.intermediate_dims = *intermediate_dims;
    if (context_length) base.context_length = *context_length;
    if (attn_heads) base.attn_heads = *attn_heads;
    if (kv_heads) base.kv_heads = *kv_heads;
    if (layers) base.layers = *layers;
    if (attn_dropout) base.attn_dropout = static_cast<float>(*attn_dropout);
    if (rope_theta) base.rope_theta = static_cast<float>(*rope_theta);
    if (rms_eps) base.rms_eps = static_cast<float>(*rms_eps);
    return base;
  }();
  e.hidden_dims = mc.hidden_dims;
  e.intermediate_dims = mc.intermediate_dims;
  e.context_length = mc.context_length;
  e.attn_heads = mc.attn_heads;
  e.kv_heads = mc.kv_heads;
  e.layers = mc.layers;
  e.attn_dropout = attn_dropout ? *attn_dropout
                                : static_cast<double>(mc.attn_dropout);
  e.rope_theta = rope_theta ? *rope_theta
                            : static_cast<double>(mc.rope_theta);
  e.rms_eps = rms_eps ? *rms_eps : static_cast<double>(mc.rms_eps);
  return e;
}

std::string serialize_run_config(const RunConfig& c) {
  std::string out = "# lsrec run configuration\n";
  const auto line = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  line("data.ratings", c.data_ratings);
  line("data.movies", c.data_movies);
  line("corpus", c.corpus_path);
  line("out.dir", c.out_dir);
  line("model.preset", c.preset);
  if (c.hidden_dims) line("model.hidden_dims", str_cat(*c.hidden_dims));
  if (c.intermediate_dims) {
    line("model.intermediate_dims", str_cat(*c.intermediate_dims));
  }
  if (c.context_length) {
    line("model.context_length", str_cat(*c.context_length));
  }
  if (c.attn_heads) line("model.attn_heads", str_cat(*c.attn_heads));
  if (c.kv_heads) line("model.kv_heads", str_cat(*c.kv_heads));
  if (c.layers) line("model.layers", str_cat(*c.layers));
  if (c.attn_dropout) line("model.attn_dropout", format_double(*c.attn_dropout));
  if (c.rope_theta) line("model.rope_theta", format_double(*c.rope_theta));
  if (c.rms_eps) line("model.rms_eps", format_double(*c.rms_eps));
  line("train.tasks", c.tasks);
  line("train.seed", str_cat(c.seed));
  line("train.lr", format_double(c.lr));
  line("train.batch_rows", str_cat(c.batch_rows));
  line("train.max_epochs", str_cat(c.max_epochs));
  line("train.patience", str_cat(c.patience));
  line("train.warmup_steps", str_cat(c.warmup_steps));
  line("train.beta1", format_double(c.beta1));
  line("train.beta2", format_double(c.beta2));
  line("train.adam_eps", format_double(c.adam_eps));
  line("train.weight_decay", format_double(c.weight_decay));
  line("train.clip_norm", format_double(c.clip_norm));
  line("train.loss_mask", c.loss_mask);
  line("eval.split", c.eval_split);
  std::string ks;
  for (size_t i = 0; i < c.eval_ks.size(); ++i) {
    if (i) ks += ",";
    ks += str_cat(c.eval_ks[i]);
  }
  line("eval.ks", ks);
  line("eval.sample_users",
       c.eval_sample_users == 0 ? "all" : str_cat(c.eval_sample_users));
  line("eval.seed", str_cat(c.eval_seed));
  line("threads", str_cat(c.threads));
  return out;
}

}  // namespace lsrec
