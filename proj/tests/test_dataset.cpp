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
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "lsrec/dataset.hpp"
#include "testutil.hpp"

using namespace lsrec;

TEST_CASE("parse_ratings") {
  std::stringstream in("1::122::5::838985046\n\n2::7::3.5::100\n");
  const auto rows = parse_ratings(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].user_id == 1);
  CHECK(rows[0].movie_id == 122);
  CHECK(rows[0].rating == 5.0f);
  CHECK(rows[0].timestamp == 838985046);
  CHECK(rows[1].rating == 3.5f);

  std::stringstream empty("");
  CHECK(parse_ratings(empty).empty());

  std::stringstream three_fields("1::122::5");
  CHECK_THROWS_AS(parse_ratings(three_fields), ParseError);

  std::stringstream bad_rating("1::122::3.7::100");
  CHECK_THROWS_AS(parse_ratings(bad_rating), ParseError);

  // error message carries the line number
  std::stringstream late_error("1::122::5::1\n1::122::5\n");
  try {
    parse_ratings(late_error);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_movies") {
  std::stringstream in(
      "1::Toy Story (1995)::Adventure|Comedy\n"
      "9::X (2000)::Drama\n"
      "10::No Genre (2001)::\n"
      "11::Dup Genre (2002)::Drama|Drama\n");
  const auto movies = parse_movies(in);
  REQUIRE(movies.size() == 4);
  CHECK(movies[0].movie_id == 1);
  CHECK(movies[0].title == "Toy Story (1995)");
  CHECK(movies[0].genres == std::vector<std::string>{"Adventure", "Comedy"});
  CHECK(movies[1].genres == std::vector<std::string>{"Drama"});
  CHECK(movies[2].genres == std::vector<std::string>{kUnknownGenre});
  CHECK(movies[3].genres == std::vector<std::string>{"Drama"});

  std::stringstream two_fields("5::Title Only");
  CHECK_THROWS_AS(parse_movies(two_fields), ParseError);
}

namespace {

std::vector<MovieRecord> make_movies(int n) {
  std::vector<MovieRecord> movies;
  for (int i = 0; i < n; ++i) {
    movies.push_back(MovieRecord{100 + i, str_cat("M", 100 + i, " (2000)"),
                                 {i % 2 ? "Drama" : "Comedy"}});
  }
  return movies;
}

RawInteraction inter(int64_t user, int32_t movie, float rating, int64_t ts) {
  return RawInteraction{user, movie, rating, ts};
}

}  // namespace

TEST_CASE("build_sequences filtering, truncation and splits") {
  auto movies = make_movies(300);
  std::vector<RawInteraction> rows;
  // user 1: 4 interactions -> dropped
  for (int i = 0; i < 4; ++i) rows.push_back(inter(1, 100 + i, 3.0f, i));
  // user 2: exactly 5 -> kept, splits (2,3,4)
  for (int i = 0; i < 5; ++i) rows.push_back(inter(2, 100 + i, 4.0f, 10 + i));
  // user 3: 250 -> truncated to the most recent 200
  for (int i = 0; i < 250; ++i) {
    rows.push_back(inter(3, 100 + (i % 300), 2.5f, 1000 + i));
  }

  const auto seqs = build_sequences(rows, movies);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].user_id == 2);
  CHECK(seqs[0].length() == 5);
  CHECK(seqs[0].train_target_index == 2);
  CHECK(seqs[0].val_target_index == 3);
  CHECK(seqs[0].test_target_index == 4);

  CHECK(seqs[1].user_id == 3);
  CHECK(seqs[1].length() == 200);
  // latest timestamp survives truncation
  CHECK(seqs[1].items.back().timestamp == 1000 + 249);
  CHECK(seqs[1].items.front().timestamp == 1000 + 50);
  CHECK(seqs[1].test_target_index == 199);

  // unknown movie id is reported by value
  std::vector<RawInteraction> bad = {inter(9, 999, 3.0f, 0)};
  try {
    build_sequences(bad, movies);
    FAIL("expected error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("999") != std::string::npos);
  }
}

TEST_CASE("build_sequences timestamp ties break by movie id") {
  auto movies = make_movies(10);
  std::vector<RawInteraction> rows;
  for (int i = 4; i >= 0; --i) rows.push_back(inter(1, 100 + i, 3.0f, 42));
  const auto seqs = build_sequences(rows, movies);
  REQUIRE(seqs.size() == 1);
  for (int i = 0; i < 5; ++i) {
    CHECK(seqs[0].items[static_cast<size_t>(i)].movie_id == 100 + i);
  }
}

TEST_CASE("vocabulary layout and size") {
  // 0 movies, 0 genres -> 21 tokens
  const auto empty = Vocabulary::build({}, {});
  CHECK(empty.size() == 21);

  // 6 + 5 + G + 10 + M
  std::vector<std::string> genres = {"Action", "Comedy", "Drama"};
  std::vector<int32_t> ids;
  for (int i = 0; i < 100; ++i) ids.push_back(10 + i);
  const auto vocab = Vocabulary::build(genres, ids);
  CHECK(vocab.size() == 6 + 5 + 3 + 10 + 100);
  CHECK(vocab.genre_count() == 3);
  CHECK(vocab.movie_count() == 100);

  // PAD is id 0; fixed structural ids
  CHECK(vocab.label(0) == "PAD");
  CHECK(vocab.id_of("PAD") == 0);
  CHECK(vocab.id_of("BOS") == Vocabulary::kBos);
  CHECK(vocab.id_of("RECOMMEND") == Vocabulary::kRecommend);

  // genres sorted lexicographically; ratings ascending; movies ascending
  CHECK(vocab.label(vocab.genre_begin()) == "G_Action");
  CHECK(vocab.rating_of(vocab.rating_begin()) == 0.5f);
  CHECK(vocab.rating_of(vocab.rating_begin() + 9) == 5.0f);
  CHECK(vocab.movie_id_of(vocab.movie_begin()) == 10);
  CHECK(vocab.movie_token(109) == vocab.movie_begin() + 99);
}

TEST_CASE("vocabulary bijection and segment soundness (exhaustive)") {
  std::vector<std::string> genres = {"Action", "Comedy", "Drama", "War"};
  std::vector<int32_t> ids = {5, 17, 30, 31, 32, 900};
  const auto vocab = Vocabulary::build(genres, ids);
  for (int32_t id = 0; id < vocab.size(); ++id) {
    // label -> id round trip
    CHECK(vocab.id_of(vocab.label(id)) == id);
    // range-check classification agrees with classify-by-label
    const std::string& label = vocab.label(id);
    TokenClass by_label;
    if (label.rfind("G_", 0) == 0) {
      by_label = TokenClass::kGenre;
    } else if (label.rfind("R_", 0) == 0) {
      by_label = TokenClass::kRating;
    } else if (label[0] == 'M' && label.size() > 1 &&
               std::isdigit(static_cast<unsigned char>(label[1]))) {
      by_label = TokenClass::kMovie;
    } else if (label == "RECOMMEND" || label == "RECOMMEND_GENRE" ||
               label == "RATE_MOVIE" || label == "MOVIE_BY_GENRE" ||
               label == "RECOMMEND_RATING") {
      by_label = TokenClass::kTask;
    } else {
      by_label = TokenClass::kStructural;
    }
    CHECK(vocab.classify(id) == by_label);
  }
}

TEST_CASE("vocabulary determinism") {
  auto movies = make_movies(20);
  const auto genres = collect_genres(movies);
  const auto a = build_vocabulary(movies, genres);
  const auto b = build_vocabulary(movies, genres);
  REQUIRE(a.size() == b.size());
  for (int32_t id = 0; id < a.size(); ++id) {
    CHECK(a.label(id) == b.label(id));
  }
  CHECK(a.hash() == b.hash());
}

TEST_CASE("corpus round trip is byte-exact") {
  const auto corpus = lsrec::test::synthetic_corpus(12, 40, 4, 30, 7);
  const auto dir = std::filesystem::temp_directory_path() / "lsrec_test";
  std::filesystem::create_directories(dir);
  const std::string p1 = (dir / "c1.bin").string();
  const std::string p2 = (dir / "c2.bin").string();
  save_corpus(corpus, p1);
  const auto loaded = load_corpus(p1);
  save_corpus(loaded, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  CHECK(!b1.str().empty());

  CHECK(loaded.vocab.hash() == corpus.vocab.hash());
  CHECK(loaded.sequences.size() == corpus.sequences.size());
  CHECK(loaded.movies.size() == corpus.movies.size());

  // corrupt file fails its checksum or framing
  auto bytes = b1.str();
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] + 1);
  const std::string p3 = (dir / "c3.bin").string();
  std::ofstream(p3, std::ios::binary).write(bytes.data(),
                                            static_cast<long>(bytes.size()));
  CHECK_THROWS(load_corpus(p3));
}

TEST_CASE("sequence invariants over a random corpus") {
  const auto corpus = lsrec::test::synthetic_corpus(30, 60, 5, 40, 11);
  for (const auto& s : corpus.sequences) {
    CHECK(s.length() >= kMinSequenceLength);
    CHECK(s.length() <= kMaxSequenceLength);
    CHECK(s.test_target_index == s.length() - 1);
    CHECK(s.val_target_index == s.length() - 2);
    CHECK(s.train_target_index == s.length() - 3);
    for (int i = 1; i < s.length(); ++i) {
      const auto& a = s.items[static_cast<size_t>(i - 1)];
      const auto& b = s.items[static_cast<size_t>(i)];
      const bool ordered = a.timestamp < b.timestamp ||
                           (a.timestamp == b.timestamp &&
                            a.movie_id < b.movie_id);
      CHECK(ordered);
    }
  }
}
