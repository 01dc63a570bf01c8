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
#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// MovieLens-format ingestion: ratings/movies parsing, per-user sequences
// with leave-one-out split indices, and the token vocabulary. All types are
// immutable after construction and safe to share read-only across threads.

namespace lsrec {

// Users below this interaction count are dropped; longer histories keep
// their most recent kMaxSequenceLength items.
inline constexpr int kMinSequenceLength = 5;
inline constexpr int kMaxSequenceLength = 200;

inline constexpr const char* kUnknownGenre = "UNKNOWN_GENRE";

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RawInteraction {
  int64_t user_id = 0;
  int32_t movie_id = 0;
  float rating = 0.0f;  // half-star value in {0.5, 1.0, ..., 5.0}
  int64_t timestamp = 0;
};

struct MovieRecord {
  int32_t movie_id = 0;
  std::string title;
  std::vector<std::string> genres;  // de-duplicated, never empty
};

struct SequenceItem {
  int32_t movie_id = 0;
  float rating = 0.0f;
  int64_t timestamp = 0;
};

struct InteractionSequence {
  int64_t user_id = 0;
  std::vector<SequenceItem> items;  // ascending (timestamp, movie_id)
  int train_target_index = 0;       // len-3
  int val_target_index = 0;         // len-2
  int test_target_index = 0;        // len-1

  int length() const { return static_cast<int>(items.size()); }
};

enum class TokenClass { kStructural, kTask, kGenre, kRating, kMovie };

// Token table layout, in id order:
//   [0,6)            structural: PAD BOS EOS TASK ARGUMENTS START
//   [6,11)           tasks: RECOMMEND RECOMMEND_GENRE RATE_MOVIE
//                           MOVIE_BY_GENRE RECOMMEND_RATING
//   [11,11+G)        genres, sorted lexicographically, labelled "G_<name>"
//   [11+G,11+G+10)   ratings 0.5..5.0 ascending, labelled "R_<value>"
//   [11+G+10,...)    movies, ascending movie id, labelled "M<id>"
class Vocabulary {
 public:
  enum : int32_t {
    kPad = 0,
    kBos = 1,
    kEos = 2,
    kTask = 3,
    kArguments = 4,
    kStart = 5,
    kRecommend = 6,
    kRecommendGenre = 7,
    kRateMovie = 8,
    kMovieByGenre = 9,
    kRecommendRating = 10,
  };
  static constexpr int kStructuralCount = 6;
  static constexpr int kTaskCount = 5;
  static constexpr int kRatingCount = 10;

  Vocabulary() = default;

  // `genres` must be sorted and unique; `movie_ids` ascending and unique.
  static Vocabulary build(const std::vector<std::string>& genres,
                          const std::vector<int32_t>& movie_ids);

  int32_t size() const { return static_cast<int32_t>(labels_.size()); }
  const std::string& label(int32_t id) const;
  int32_t id_of(const std::string& label) const;  // throws if unknown
  TokenClass classify(int32_t id) const;

  int32_t genre_begin() const { return kStructuralCount + kTaskCount; }
  int32_t genre_count() const { return genre_count_; }
  int32_t rating_begin() const { return genre_begin() + genre_count_; }
  int32_t rating_count() const { return kRatingCount; }
  int32_t movie_begin() const { return rating_begin() + kRatingCount; }
  int32_t movie_count() const { return movie_count_; }

  bool is_movie_token(int32_t id) const {
    return id >= movie_begin() && id < movie_begin() + movie_count_;
  }

  int32_t movie_token(int32_t movie_id) const;  // throws if unknown
  int32_t movie_id_of(int32_t token) const;
  int32_t genre_token(const std::string& genre) const;
  const std::string& genre_name_of(int32_t token) const;
  int32_t rating_token(float rating) const;  // validates half-star grid
  float rating_of(int32_t token) const;

  const std::vector<std::string>& genre_names() const { return genre_names_; }

  // FNV-1a over all labels in id order; corpus/checkpoint compatibility key.
  uint64_t hash() const { return hash_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int32_t> label_to_id_;
  std::unordered_map<int32_t, int32_t> movie_id_to_token_;
  std::vector<int32_t> movie_ids_;         // by movie-segment offset
  std::vector<std::string> genre_names_;   // by genre-segment offset
  int32_t genre_count_ = 0;
  int32_t movie_count_ = 0;
  uint64_t hash_ = 0;
};

// Validates the half-star grid; returns the 1..10 half-star count.
int rating_to_halfstars(double rating);

// MovieLens ratings.dat: UserID::MovieID::Rating::Timestamp
std::vector<RawInteraction> parse_ratings(std::istream& in);

// MovieLens movies.dat: MovieID::Title::Genre1|Genre2|...
std::vector<MovieRecord> parse_movies(std::istream& in);

// Sorted unique genre names across all movies.
std::vector<std::string> collect_genres(const std::vector<MovieRecord>& movies);

// Groups interactions per user, orders by (timestamp, movie_id), drops
// users with fewer than kMinSequenceLength interactions, keeps the most
// recent kMaxSequenceLength, and assigns the three split indices. Output is
// sorted by user id.
std::vector<InteractionSequence> build_sequences(
    const std::vector<RawInteraction>& interactions,
    const std::vector<MovieRecord>& movies);

Vocabulary build_vocabulary(const std::vector<MovieRecord>& movies,
                            const std::vector<std::string>& genres);

struct CorpusMovie {
  int32_t movie_id = 0;
  std::string title;
  std::vector<int32_t> genre_tokens;  // ascending token id
};

struct Corpus {
  Vocabulary vocab;
  std::vector<CorpusMovie> movies;               // ascending movie_id
  std::vector<InteractionSequence> sequences;    // ascending user_id

  const CorpusMovie& movie_by_id(int32_t movie_id) const;
  const InteractionSequence* find_user(int64_t user_id) const;
};

Corpus build_corpus(const std::vector<RawInteraction>& interactions,
                    const std::vector<MovieRecord>& movies);

// Corpus file format (little-endian, byte-exact round trip):
//   magic "LSRCORPS", u32 version
//   u32 genre count, then each genre name (u16 length + bytes, sorted)
//   u32 movie count, then per movie: i32 id (ascending), title string,
//     u16 genre-token count, i32 genre tokens
//   u32 sequence count, then per sequence: i64 user id, u32 length,
//     items as (i32 movie id, u8 half-stars, i64 timestamp),
//     i32 train/val/test target indices
//   u64 FNV-1a of everything above
// The vocabulary is rebuilt deterministically from the genre and movie
// tables on load.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace lsrec
