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
// End-to-end CLI checks driven through the built binary (path in argv[1]):
// prepare -> train -> eval -> recommend, including failure and determinism
// cases. Plain main; prints one line per check.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "synthetic_data.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "[ok]" : "[FAIL]", what.c_str());
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string capture(const std::string& cmd, const fs::path& tmp) {
  const fs::path out = tmp / "capture.txt";
  const int rc = std::system((cmd + " > " + out.string() + " 2>&1").c_str());
  (void)rc;
  return slurp(out);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-lsrec-binary>\n");
    return 2;
  }
  const std::string bin = fs::absolute(argv[1]).string();
  const fs::path tmp = fs::temp_directory_path() / "lsrec_cli_tests";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  // small synthetic dataset
  lsrec::test::TrendDataConfig cfg;
  cfg.n_users = 30;
  cfg.n_movies = 60;
  cfg.min_len = 8;
  cfg.max_len = 16;
  cfg.seed = 11;
  {
    std::ofstream ratings(tmp / "ratings.dat");
    std::ofstream movies(tmp / "movies.dat");
    lsrec::test::write_trend_dataset(cfg, ratings, movies);
  }

  const std::string corpus = (tmp / "corpus.bin").string();
  const std::string prep = bin + " prepare --ratings " +
                           (tmp / "ratings.dat").string() + " --movies " +
                           (tmp / "movies.dat").string() + " --out ";

  expect(run(prep + corpus) == 0, "prepare succeeds");
  expect(fs::exists(corpus), "corpus file written");

  // deterministic corpus bytes across runs
  const std::string corpus2 = (tmp / "corpus2.bin").string();
  expect(run(prep + corpus2) == 0, "second prepare succeeds");
  expect(slurp(corpus) == slurp(corpus2), "prepare is byte-deterministic");

  // bare output filename (no directory component)
  expect(run("cd " + tmp.string() + " && " + prep + "bare.bin") == 0,
         "prepare accepts a bare output filename");

  // missing movies file: clean error, no partial output
  const std::string missing = bin + " prepare --ratings " +
                              (tmp / "ratings.dat").string() +
                              " --movies " + (tmp / "nope.dat").string() +
                              " --out " + (tmp / "broken.bin").string();
  expect(run(missing) == 2, "missing movies file exits 2");
  expect(!fs::exists(tmp / "broken.bin"), "no partial corpus on failure");

  // usage error
  expect(run(bin + " prepare --no-such-flag") == 1,
         "usage error exits 1");
  expect(run(bin + " eval") == 1, "missing required options exit 1");

  // inspect-config with defaults
  const std::string inspected = capture(bin + " inspect-config", tmp);
  expect(inspected.find("model.preset = small") != std::string::npos,
         "inspect-config prints effective defaults");
  expect(inspected.find("train.patience = 20") != std::string::npos,
         "inspect-config includes documented defaults");

  // config file with an unknown key is rejected
  {
    std::ofstream bad(tmp / "bad.cfg");
    bad << "train.sed = 5\n";
  }
  expect(run(bin + " inspect-config --config " + (tmp / "bad.cfg").string()) ==
             2,
         "unknown config key exits 2");

  // train a tiny run
  const std::string out_dir = (tmp / "out").string();
  const std::string train = bin + " train --corpus " + corpus +
                            " --out-dir " + out_dir +
                            " --max-epochs 2 --patience 5 --seed 4" +
                            " --batch-rows 4";
  expect(run(train) == 0, "train succeeds");
  const fs::path ckpt = fs::path(out_dir) / "checkpoints" / "best.ckpt";
  expect(fs::exists(ckpt), "checkpoint written");
  expect(fs::exists(fs::path(out_dir) / "logs" / "train.log"),
         "train log written");
  expect(fs::exists(fs::path(out_dir) / "logs" / "effective.cfg"),
         "effective config written");
  {
    const std::string log = slurp(fs::path(out_dir) / "logs" / "train.log");
    expect(log.find("epoch=1") != std::string::npos &&
               log.find("val_loss=") != std::string::npos &&
               log.find("val_hr10=") != std::string::npos,
           "log lines follow the documented schema");
  }

  // rerun without --force is refused
  expect(run(train) == 2, "train refuses to overwrite without --force");
  expect(run(train + " --force") == 0, "train --force overwrites");

  // multi-task run logs five examples per user
  const std::string out_mt = (tmp / "out_mt").string();
  const std::string train_mt = bin + " train --corpus " + corpus +
                               " --out-dir " + out_mt + " --tasks multi" +
                               " --max-epochs 1 --patience 5 --seed 4" +
                               " --batch-rows 4";
  {
    const std::string text = capture(train_mt, tmp);
    std::ostringstream expect_count;
    expect_count << 5 * cfg.n_users << " examples/epoch";
    expect(text.find(expect_count.str()) != std::string::npos,
           "multi-task reports 5 examples per user per epoch");
  }

  // same seed, fresh output dir: byte-identical checkpoint
  const std::string out_dir2 = (tmp / "out_rerun").string();
  expect(run(bin + " train --corpus " + corpus + " --out-dir " + out_dir2 +
             " --max-epochs 2 --patience 5 --seed 4 --batch-rows 4") == 0,
         "rerun with same seed succeeds");
  expect(slurp(ckpt) == slurp(fs::path(out_dir2) / "checkpoints" /
                              "best.ckpt"),
         "training is byte-deterministic given the seed");

  // eval writes byte-identical machine-readable reports
  const std::string eval = bin + " eval --checkpoint " + ckpt.string() +
                           " --corpus " + corpus + " --out-dir " + out_dir;
  expect(run(eval) == 0, "eval succeeds");
  const fs::path json = fs::path(out_dir) / "reports" / "metrics_test.json";
  expect(fs::exists(json), "metrics json written");
  expect(fs::exists(fs::path(out_dir) / "reports" / "metrics_test.txt"),
         "metrics table written");
  const std::string first = slurp(json);
  expect(run(eval) == 0, "second eval succeeds");
  expect(slurp(json) == first, "eval reports are byte-identical");
  expect(first.find("\"k\": 1") != std::string::npos &&
             first.find("\"k\": 20") != std::string::npos,
         "full K set appears in the report");

  // sampled protocol
  expect(run(eval + " --sample-users 10 --seed 3") == 0,
         "sampled eval succeeds");

  // recommend: K=1 prints exactly one ranked line; history excluded
  const std::string rec = capture(bin + " recommend --checkpoint " +
                                      ckpt.string() + " --corpus " + corpus +
                                      " --user 1 --k 1",
                                  tmp);
  expect(rec.find("  1. ") != std::string::npos &&
             rec.find("  2. ") == std::string::npos,
         "recommend --k 1 prints exactly one title");

  // unknown user
  expect(run(bin + " recommend --checkpoint " + ckpt.string() + " --corpus " +
             corpus + " --user 424242 --k 3") == 2,
         "unknown user exits 2");
  const std::string unknown_msg =
      capture(bin + " recommend --checkpoint " + ckpt.string() +
                  " --corpus " + corpus + " --user 424242 --k 3",
              tmp);
  expect(unknown_msg.find("424242") != std::string::npos,
         "unknown-user message names the id");

  // checkpoint/corpus mismatch: corpus from different movie set
  {
    lsrec::test::TrendDataConfig other = cfg;
    other.n_movies = 61;
    std::ofstream ratings(tmp / "ratings_b.dat");
    std::ofstream movies(tmp / "movies_b.dat");
    lsrec::test::write_trend_dataset(other, ratings, movies);
  }
  const std::string corpus_b = (tmp / "corpus_b.bin").string();
  expect(run(bin + " prepare --ratings " + (tmp / "ratings_b.dat").string() +
             " --movies " + (tmp / "movies_b.dat").string() + " --out " +
             corpus_b) == 0,
         "second corpus prepares");
  expect(run(bin + " eval --checkpoint " + ckpt.string() + " --corpus " +
             corpus_b) == 2,
         "vocabulary hash mismatch exits 2");

  std::printf("%s: %d failure(s)\n", failures ? "FAILED" : "PASSED",
              failures);
  return failures ? 1 : 0;
}
