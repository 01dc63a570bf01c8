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
#include "lsrec/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "lsrec/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "corpus file format assumes a little-endian host");

namespace lsrec {

namespace {

std::vector<std::string_view> split_on(std::string_view line,
                                       std::string_view sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (true) {
    const size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw ParseError(str_cat("line ", line_no, ": ", what));
}

int64_t parse_int(std::string_view field, int line_no, const char* name) {
  int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    parse_fail(line_no, str_cat("invalid ", name, " '", field, "'"));
  }
  return value;
}

double parse_double(std::string_view field, int line_no, const char* name) {
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    parse_fail(line_no, str_cat("invalid ", name, " '", field, "'"));
  }
  return value;
}

std::string rating_label(int halfstars) {
  return str_cat("R_", halfstars / 2, ".", (halfstars % 2) ? 5 : 0);
}

}  // namespace

int rating_to_halfstars(double rating) {
  const double doubled = rating * 2.0;
  const int halfstars = static_cast<int>(std::lround(doubled));
  if (std::abs(doubled - halfstars) > 1e-9 || halfstars < 1 ||
      halfstars > 10) {
    fail(str_cat("rating ", rating, " is not a half-star value in [0.5,5]"));
  }
  return halfstars;
}

std::vector<RawInteraction> parse_ratings(std::istream& in) {
  std::vector<RawInteraction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_on(line, "::");
    if (fields.size() != 4) {
      parse_fail(line_no, str_cat("expected 4 '::'-separated fields, got ",
                                  fields.size()));
    }
    RawInteraction r;
    r.user_id = parse_int(fields[0], line_no, "user id");
    r.movie_id =
        static_cast<int32_t>(parse_int(fields[1], line_no, "movie id"));
    const double rating = parse_double(fields[2], line_no, "rating");
    try {
      r.rating = static_cast<float>(rating_to_halfstars(rating)) / 2.0f;
    } catch (const std::exception& e) {
      parse_fail(line_no, e.what());
    }
    r.timestamp = parse_int(fields[3], line_no, "timestamp");
    if (r.timestamp < 0) parse_fail(line_no, "negative timestamp");
    out.push_back(r);
  }
  return out;
}

std::vector<MovieRecord> parse_movies(std::istream& in) {
  std::vector<MovieRecord> out;
  std::unordered_set<int32_t> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_on(line, "::");
    if (fields.size() != 3) {
      parse_fail(line_no, str_cat("expected 3 '::'-separated fields, got ",
                                  fields.size()));
    }
    MovieRecord m;
    m.movie_id =
        static_cast<int32_t>(parse_int(fields[0], line_no, "movie id"));
    if (!seen.insert(m.movie_id).second) {
      parse_fail(line_no, str_cat("duplicate movie id ", m.movie_id));
    }
    m.title = std::string(fields[1]);
    for (std::string_view g : split_on(fields[2], "|")) {
      if (g.empty()) continue;
      const std::string name(g);
      if (std::find(m.genres.begin(), m.genres.end(), name) ==
          m.genres.end()) {
        m.genres.push_back(name);
      }
    }
    if (m.genres.empty()) m.genres.push_back(kUnknownGenre);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::string> collect_genres(
    const std::vector<MovieRecord>& movies) {
  std::set<std::string> names;
  for (const auto& m : movies) {
    names.insert(m.genres.begin(), m.genres.end());
  }
  return {names.begin(), names.end()};
}

std::vector<InteractionSequence> build_sequences(
    const std::vector<RawInteraction>& interactions,
    const std::vector<MovieRecord>& movies) {
  std::unordered_set<int32_t> known;
  known.reserve(movies.size());
  for (const auto& m : movies) known.insert(m.movie_id);

  std::map<int64_t, std::vector<SequenceItem>> per_user;
  for (const auto& r : interactions) {
    LSREC_CHECK(known.count(r.movie_id) != 0, "interaction references movie ",
                r.movie_id, " which is not in the movie table");
    per_user[r.user_id].push_back(
        SequenceItem{r.movie_id, r.rating, r.timestamp});
  }

  std::vector<InteractionSequence> out;
  out.reserve(per_user.size());
  for (auto& [user_id, items] : per_user) {
    // The <5 filter runs before truncation; truncation cannot drop a user.
    if (static_cast<int>(items.size()) < kMinSequenceLength) continue;
    std::sort(items.begin(), items.end(),
              [](const SequenceItem& a, const SequenceItem& b) {
                if (a.timestamp != b.timestamp) {
                  return a.timestamp < b.timestamp;
                }
                return a.movie_id < b.movie_id;
              });
    if (static_cast<int>(items.size()) > kMaxSequenceLength) {
      // Keep the most recent suffix; the split targets live there.
      items.erase(items.begin(),
                  items.end() - static_cast<ptrdiff_t>(kMaxSequenceLength));
    }
    InteractionSequence seq;
    seq.user_id = user_id;
    seq.items = std::move(items);
    const int len = seq.length();
    seq.train_target_index = len - 3;
    seq.val_target_index = len - 2;
    seq.test_target_index = len - 1;
    out.push_back(std::move(seq));
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& genres,
                             const std::vector<int32_t>& movie_ids) {
  Vocabulary v;
  v.labels_ = {"PAD", "BOS", "EOS", "TASK", "ARGUMENTS", "START",
               "RECOMMEND", "RECOMMEND_GENRE", "RATE_MOVIE",
               "MOVIE_BY_GENRE", "RECOMMEND_RATING"};
  v.genre_count_ = static_cast<int32_t>(genres.size());
  v.genre_names_ = genres;
  for (size_t i = 0; i + 1 < genres.size(); ++i) {
    LSREC_CHECK(genres[i] < genres[i + 1],
                "genre list must be sorted and unique");
  }
  for (const auto& g : genres) v.labels_.push_back("G_" + g);
  for (int h = 1; h <= kRatingCount; ++h) v.labels_.push_back(rating_label(h));
  v.movie_count_ = static_cast<int32_t>(movie_ids.size());
  v.movie_ids_ = movie_ids;
  for (size_t i = 0; i + 1 < movie_ids.size(); ++i) {
    LSREC_CHECK(movie_ids[i] < movie_ids[i + 1],
                "movie id list must be ascending and unique");
  }
  for (int32_t id : movie_ids) v.labels_.push_back(str_cat("M", id));

  v.label_to_id_.reserve(v.labels_.size());
  uint64_t h = fnv1a_init();
  for (size_t i = 0; i < v.labels_.size(); ++i) {
    const auto [it, inserted] =
        v.label_to_id_.emplace(v.labels_[i], static_cast<int32_t>(i));
    LSREC_CHECK(inserted, "duplicate token label '", v.labels_[i], "'");
    h = fnv1a_update(h, v.labels_[i].data(), v.labels_[i].size());
    h = fnv1a_update(h, "\0", 1);
  }
  v.hash_ = h;
  v.movie_id_to_token_.reserve(movie_ids.size());
  for (size_t i = 0; i < movie_ids.size(); ++i) {
    v.movie_id_to_token_.emplace(
        movie_ids[i], v.movie_begin() + static_cast<int32_t>(i));
  }
  return v;
}

const std::string& Vocabulary::label(int32_t id) const {
  LSREC_CHECK(id >= 0 && id < size(), "token id ", id, " out of range");
  return labels_[static_cast<size_t>(id)];
}

int32_t Vocabulary::id_of(const std::string& label) const {
  const auto it = label_to_id_.find(label);
  LSREC_CHECK(it != label_to_id_.end(), "unknown token label '", label, "'");
  return it->second;
}

TokenClass Vocabulary::classify(int32_t id) const {
  LSREC_CHECK(id >= 0 && id < size(), "token id ", id, " out of range");
  if (id < kStructuralCount) return TokenClass::kStructural;
  if (id < genre_begin()) return TokenClass::kTask;
  if (id < rating_begin()) return TokenClass::kGenre;
  if (id < movie_begin()) return TokenClass::kRating;
  return TokenClass::kMovie;
}

int32_t Vocabulary::movie_token(int32_t movie_id) const {
  const auto it = movie_id_to_token_.find(movie_id);
  LSREC_CHECK(it != movie_id_to_token_.end(), "unknown movie id ", movie_id);
  return it->second;
}

int32_t Vocabulary::movie_id_of(int32_t token) const {
  LSREC_CHECK(is_movie_token(token), "token ", token, " is not a movie token");
  return movie_ids_[static_cast<size_t>(token - movie_begin())];
}

int32_t Vocabulary::genre_token(const std::string& genre) const {
  return id_of("G_" + genre);
}

const std::string& Vocabulary::genre_name_of(int32_t token) const {
  LSREC_CHECK(classify(token) == TokenClass::kGenre, "token ", token,
              " is not a genre token");
  return genre_names_[static_cast<size_t>(token - genre_begin())];
}

int32_t Vocabulary::rating_token(float rating) const {
  return rating_begin() + rating_to_halfstars(rating) - 1;
}

float Vocabulary::rating_of(int32_t token) const {
  LSREC_CHECK(classify(token) == TokenClass::kRating, "token ", token,
              " is not a rating token");
  return static_cast<float>(token - rating_begin() + 1) / 2.0f;
}

Vocabulary build_vocabulary(const std::vector<MovieRecord>& movies,
                            const std::vector<std::string>& genres) {
  std::vector<int32_t> ids;
  ids.reserve(movies.size());
  for (const auto& m : movies) ids.push_back(m.movie_id);
  std::sort(ids.begin(), ids.end());
  for (size_t i = 0; i + 1 < ids.size(); ++i) {
    LSREC_CHECK(ids[i] != ids[i + 1], "duplicate movie id ", ids[i]);
  }
  return Vocabulary::build(genres, ids);
}

const CorpusMovie& Corpus::movie_by_id(int32_t movie_id) const {
  const auto it = std::lower_bound(
      movies.begin(), movies.end(), movie_id,
      [](const CorpusMovie& m, int32_t id) { return m.movie_id < id; });
  LSREC_CHECK(it != movies.end() && it->movie_id == movie_id,
              "unknown movie id ", movie_id);
  return *it;
}

const InteractionSequence* Corpus::find_user(int64_t user_id) const {
  const auto it = std::lower_bound(
      sequences.begin(), sequences.end(), user_id,
      [](const InteractionSequence& s, int64_t id) { return s.user_id < id; });
  if (it == sequences.end() || it->user_id != user_id) return nullptr;
  return &*it;
}

Corpus build_corpus(const std::vector<RawInteraction>& interactions,
                    const std::vector<MovieRecord>& movies) {
  Corpus corpus;
  const auto genres = collect_genres(movies);
  corpus.vocab = build_vocabulary(movies, genres);
  corpus.sequences = build_sequences(interactions, movies);

  corpus.movies.reserve(movies.size());
  for (const auto& m : movies) {
    CorpusMovie cm;
    cm.movie_id = m.movie_id;
    cm.title = m.title;
    for (const auto& g : m.genres) {
      cm.genre_tokens.push_back(corpus.vocab.genre_token(g));
    }
    std::sort(cm.genre_tokens.begin(), cm.genre_tokens.end());
    corpus.movies.push_back(std::move(cm));
  }
  std::sort(corpus.movies.begin(), corpus.movies.end(),
            [](const CorpusMovie& a, const CorpusMovie& b) {
              return a.movie_id < b.movie_id;
            });
  return corpus;
}

namespace {

constexpr char kCorpusMagic[8] = {'L', 'S', 'R', 'C', 'O', 'R', 'P', 'S'};
constexpr uint32_t kCorpusVersion = 1;

struct Writer {
  std::ostream& out;
  template <typename T>
  void pod(T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void string(const std::string& s) {
    LSREC_CHECK(s.size() <= 0xffff, "string too long for corpus file");
    pod<uint16_t>(static_cast<uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
};

struct Reader {
  std::istream& in;
  const std::string& path;
  template <typename T>
  T pod() {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    LSREC_CHECK(in.good(), "corrupt or truncated corpus file: ", path);
    return value;
  }
  std::string string() {
    const auto n = pod<uint16_t>();
    std::string s(n, '\0');
    in.read(s.data(), n);
    LSREC_CHECK(in.good(), "corrupt or truncated corpus file: ", path);
    return s;
  }
};

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  // Serialize into memory first: the file carries a trailing FNV-1a of the
  // whole payload, and a failed build never leaves a partial file behind.
  std::ostringstream buffer(std::ios::binary);
  std::ostream& out = buffer;
  Writer w{out};
  out.write(kCorpusMagic, sizeof(kCorpusMagic));
  w.pod<uint32_t>(kCorpusVersion);

  const auto& genres = corpus.vocab.genre_names();
  w.pod<uint32_t>(static_cast<uint32_t>(genres.size()));
  for (const auto& g : genres) w.string(g);

  w.pod<uint32_t>(static_cast<uint32_t>(corpus.movies.size()));
  for (const auto& m : corpus.movies) {
    w.pod<int32_t>(m.movie_id);
    w.string(m.title);
    w.pod<uint16_t>(static_cast<uint16_t>(m.genre_tokens.size()));
    for (int32_t g : m.genre_tokens) w.pod<int32_t>(g);
  }

  w.pod<uint32_t>(static_cast<uint32_t>(corpus.sequences.size()));
  for (const auto& s : corpus.sequences) {
    w.pod<int64_t>(s.user_id);
    w.pod<uint32_t>(static_cast<uint32_t>(s.items.size()));
    for (const auto& item : s.items) {
      w.pod<int32_t>(item.movie_id);
      w.pod<uint8_t>(
          static_cast<uint8_t>(rating_to_halfstars(item.rating)));
      w.pod<int64_t>(item.timestamp);
    }
    w.pod<int32_t>(s.train_target_index);
    w.pod<int32_t>(s.val_target_index);
    w.pod<int32_t>(s.test_target_index);
  }

  const std::string payload = buffer.str();
  const uint64_t checksum =
      fnv1a_update(fnv1a_init(), payload.data(), payload.size());

  std::ofstream file(path, std::ios::binary);
  LSREC_CHECK(file.good(), "cannot open '", path, "' for writing");
  file.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  file.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  LSREC_CHECK(file.good(), "write failed for '", path, "'");
}

Corpus load_corpus(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  LSREC_CHECK(file.good(), "cannot open corpus file '", path, "'");
  std::stringstream whole(std::ios::binary | std::ios::in | std::ios::out);
  whole << file.rdbuf();
  std::string bytes = whole.str();
  LSREC_CHECK(bytes.size() > sizeof(uint64_t) + sizeof(kCorpusMagic),
              "corrupt or truncated corpus file: ", path);

  uint64_t stored_checksum = 0;
  std::memcpy(&stored_checksum, bytes.data() + bytes.size() - sizeof(uint64_t),
              sizeof(uint64_t));
  bytes.resize(bytes.size() - sizeof(uint64_t));
  const uint64_t checksum =
      fnv1a_update(fnv1a_init(), bytes.data(), bytes.size());
  LSREC_CHECK(checksum == stored_checksum, "corpus file '", path,
              "' failed its checksum");

  std::istringstream in(bytes, std::ios::binary);
  Reader r{in, path};

  char magic[8];
  in.read(magic, sizeof(magic));
  LSREC_CHECK(in.good() && std::memcmp(magic, kCorpusMagic, 8) == 0,
              "'", path, "' is not a corpus file");
  const auto version = r.pod<uint32_t>();
  LSREC_CHECK(version == kCorpusVersion, "corpus file version ", version,
              " unsupported (expected ", kCorpusVersion, ")");

  Corpus corpus;
  const auto n_genres = r.pod<uint32_t>();
  std::vector<std::string> genres(n_genres);
  for (auto& g : genres) g = r.string();

  const auto n_movies = r.pod<uint32_t>();
  corpus.movies.resize(n_movies);
  std::vector<int32_t> movie_ids(n_movies);
  for (uint32_t i = 0; i < n_movies; ++i) {
    auto& m = corpus.movies[i];
    m.movie_id = r.pod<int32_t>();
    movie_ids[i] = m.movie_id;
    m.title = r.string();
    const auto ng = r.pod<uint16_t>();
    m.genre_tokens.resize(ng);
    for (auto& g : m.genre_tokens) g = r.pod<int32_t>();
  }
  corpus.vocab = Vocabulary::build(genres, movie_ids);

  const auto n_seqs = r.pod<uint32_t>();
  corpus.sequences.resize(n_seqs);
  for (uint32_t i = 0; i < n_seqs; ++i) {
    auto& s = corpus.sequences[i];
    s.user_id = r.pod<int64_t>();
    const auto len = r.pod<uint32_t>();
    s.items.resize(len);
    for (auto& item : s.items) {
      item.movie_id = r.pod<int32_t>();
      item.rating = static_cast<float>(r.pod<uint8_t>()) / 2.0f;
      item.timestamp = r.pod<int64_t>();
    }
    s.train_target_index = r.pod<int32_t>();
    s.val_target_index = r.pod<int32_t>();
    s.test_target_index = r.pod<int32_t>();
  }
  return corpus;
}

}  // namespace lsrec
