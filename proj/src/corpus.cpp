#include "curriculum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>
#include <json.hpp>

#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kValidation, message);
}

// K random directions of length `scale`. When K <= D they are made exactly
// orthogonal by Gram-Schmidt; otherwise they are only normalized.
std::vector<double> make_prototypes(std::size_t k, std::size_t d, double scale,
                                    Rng& rng) {
  std::vector<double> protos(k * d);
  for (auto& v : protos) v = rng.gaussian();
  for (std::size_t i = 0; i < k; ++i) {
    double* row = protos.data() + i * d;
    if (k <= d) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* prev = protos.data() + j * d;
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += row[c] * prev[c];
        for (std::size_t c = 0; c < d; ++c) row[c] -= dot * prev[c];
      }
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < d; ++c) row[c] /= norm;
  }
  for (auto& v : protos) v *= scale;
  return protos;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

json spec_to_json(const CorpusSpec& spec) {
  return json{{"n_utterances", spec.n_utterances},
              {"vocab_size", spec.vocab_size},
              {"feature_dim", spec.feature_dim},
              {"min_tokens", spec.min_tokens},
              {"max_tokens", spec.max_tokens},
              {"min_noise_sigma", spec.min_noise_sigma},
              {"max_noise_sigma", spec.max_noise_sigma},
              {"frame_seconds", spec.frame_seconds},
              {"prototype_scale", spec.prototype_scale}};
}

CorpusSpec spec_from_json(const json& j) {
  CorpusSpec spec;
  spec.n_utterances = j.at("n_utterances").get<std::size_t>();
  spec.vocab_size = j.at("vocab_size").get<std::size_t>();
  spec.feature_dim = j.at("feature_dim").get<std::size_t>();
  spec.min_tokens = j.at("min_tokens").get<std::size_t>();
  spec.max_tokens = j.at("max_tokens").get<std::size_t>();
  spec.min_noise_sigma = j.at("min_noise_sigma").get<double>();
  spec.max_noise_sigma = j.at("max_noise_sigma").get<double>();
  spec.frame_seconds = j.at("frame_seconds").get<double>();
  spec.prototype_scale = j.at("prototype_scale").get<double>();
  return spec;
}

}  // namespace

void CorpusSpec::validate() const {
  require(vocab_size >= 1, "corpus spec: vocab_size must be positive");
  require(feature_dim >= 1, "corpus spec: feature_dim must be positive");
  require(min_tokens >= 1, "corpus spec: min_tokens must be at least 1");
  require(min_tokens <= max_tokens,
          "corpus spec: token length range is empty (min_tokens > max_tokens)");
  require(min_noise_sigma >= 0.0, "corpus spec: min_noise_sigma must be >= 0");
  require(min_noise_sigma <= max_noise_sigma,
          "corpus spec: noise range is empty (min > max)");
  require(frame_seconds > 0.0, "corpus spec: frame_seconds must be positive");
  require(prototype_scale > 0.0, "corpus spec: prototype_scale must be positive");
}

bool Corpus::has_frames() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const UtteranceRecord& r) { return r.has_frames(); });
}

double Corpus::total_seconds() const {
  double total = 0.0;
  for (const auto& r : records) total += r.duration_s;
  return total;
}

const UtteranceRecord* Corpus::find(const std::string& id) const {
  // Corpora are small enough that a linear scan is fine for ad-hoc lookups;
  // hot paths build their own index.
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const UtteranceRecord& Corpus::at(const std::string& id) const {
  const auto* r = find(id);
  if (r == nullptr) {
    throw Error(ErrorKind::kValidation, "unknown utterance id '" + id + "'");
  }
  return *r;
}

void Corpus::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    require(seen.insert(r.id).second, "duplicate utterance id '" + r.id + "'");
    require(r.duration_s > 0.0, "utterance '" + r.id + "' has nonpositive duration");
    for (TokenId t : r.tokens) {
      require(t >= 0 && static_cast<std::size_t>(t) < vocab_size,
              "utterance '" + r.id + "' has a token outside the vocabulary");
    }
    if (r.has_frames()) {
      require(r.frames.size() == r.tokens.size() * feature_dim,
              "utterance '" + r.id + "' frame count does not match its tokens");
    }
  }
}

RecordView view_of(const Corpus& corpus) {
  RecordView view;
  view.reserve(corpus.records.size());
  for (const auto& r : corpus.records) view.push_back(&r);
  return view;
}

std::string token_name(TokenId id) {
  // Syllable units: a bare vowel or consonant + vowel. Every unit ends in a
  // vowel and consonants only start units, so concatenations parse uniquely.
  static const std::vector<std::string> units = [] {
    constexpr std::string_view vowels = "aeiou";
    constexpr std::string_view consonants = "ktmnslrvph";
    std::vector<std::string> u;
    for (std::size_t i = 0; i < consonants.size() * vowels.size(); ++i) {
      if (i % 10 == 0) u.emplace_back(1, vowels[i / 10]);
      u.push_back(std::string{consonants[i / vowels.size()], vowels[i % vowels.size()]});
    }
    return u;
  }();
  // Bijective base-|units| numeral.
  std::string name;
  auto n = static_cast<long long>(id) + 1;
  const auto base = static_cast<long long>(units.size());
  while (n > 0) {
    --n;
    name.insert(0, units[static_cast<std::size_t>(n % base)]);
    n /= base;
  }
  return name;
}

Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  Corpus corpus;
  corpus.frame_seconds = spec.frame_seconds;
  corpus.vocab_size = spec.vocab_size;
  corpus.feature_dim = spec.feature_dim;
  corpus.spec = spec;
  corpus.seed = seed;
  for (std::size_t k = 0; k < spec.vocab_size; ++k) {
    corpus.vocabulary.push_back(token_name(static_cast<TokenId>(k)));
  }

  const std::size_t dim = spec.feature_dim;
  const auto protos =
      make_prototypes(spec.vocab_size, dim, spec.prototype_scale, rng);

  corpus.records.reserve(spec.n_utterances);
  for (std::size_t i = 0; i < spec.n_utterances; ++i) {
    UtteranceRecord rec;
    rec.id = fmt::format("utt{:06d}", i);
    const auto length = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.min_tokens),
                    static_cast<std::int64_t>(spec.max_tokens)));
    const double sigma = rng.uniform(spec.min_noise_sigma, spec.max_noise_sigma);
    rec.noise_sigma = sigma;
    rec.tokens.resize(length);
    rec.frames.resize(length * dim);
    for (std::size_t t = 0; t < length; ++t) {
      const auto token = static_cast<TokenId>(rng.below(spec.vocab_size));
      rec.tokens[t] = token;
      const double* proto = protos.data() + static_cast<std::size_t>(token) * dim;
      for (std::size_t c = 0; c < dim; ++c) {
        rec.frames[t * dim + c] = proto[c] + sigma * rng.gaussian();
      }
    }
    rec.duration_s = static_cast<double>(length) * spec.frame_seconds;
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

Corpus load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || trim(line) != "id,duration_s,transcript") {
    throw Error(ErrorKind::kParse,
                "manifest " + path.string() +
                    ": expected header 'id,duration_s,transcript'");
  }

  Corpus corpus;
  std::unordered_map<std::string, TokenId> token_ids;
  std::unordered_set<std::string> ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto where = fmt::format("manifest {} row {}", path.string(), row);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error(ErrorKind::kParse, where + ": expected three fields");
    }
    UtteranceRecord rec;
    rec.id = trim(line.substr(0, c1));
    if (rec.id.empty()) throw Error(ErrorKind::kParse, where + ": empty id");
    const auto duration_field = trim(line.substr(c1 + 1, c2 - c1 - 1));
    if (duration_field.empty()) {
      throw Error(ErrorKind::kParse, where + ": missing duration_s");
    }
    try {
      std::size_t used = 0;
      rec.duration_s = std::stod(duration_field, &used);
      if (used != duration_field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse,
                  where + ": duration_s '" + duration_field + "' is not a number");
    }
    if (!(rec.duration_s > 0.0) || !std::isfinite(rec.duration_s)) {
      throw Error(ErrorKind::kParse,
                  where + ": duration_s must be positive, got " + duration_field);
    }
    std::istringstream words(line.substr(c2 + 1));
    std::string word;
    while (words >> word) {
      auto [it, inserted] =
          token_ids.try_emplace(word, static_cast<TokenId>(corpus.vocabulary.size()));
      if (inserted) corpus.vocabulary.push_back(word);
      rec.tokens.push_back(it->second);
    }
    if (rec.tokens.empty()) {
      throw Error(ErrorKind::kParse, where + ": empty transcript");
    }
    if (!ids.insert(rec.id).second) {
      throw Error(ErrorKind::kParse, where + ": duplicate id '" + rec.id + "'");
    }
    corpus.records.push_back(std::move(rec));
  }
  corpus.vocab_size = corpus.vocabulary.size();
  return corpus;
}

void save_manifest(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest " + path.string());
  out << "id,duration_s,transcript\n";
  for (const auto& r : corpus.records) {
    out << r.id << ',' << fmt::format("{}", r.duration_s) << ',';
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      if (t > 0) out << ' ';
      out << corpus.vocabulary.at(static_cast<std::size_t>(r.tokens[t]));
    }
    out << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "curriculum-corpus";
  doc["version"] = 1;
  doc["spec"] = corpus.spec ? spec_to_json(*corpus.spec) : json(nullptr);
  doc["seed"] = corpus.seed ? json(*corpus.seed) : json(nullptr);
  doc["frame_seconds"] = corpus.frame_seconds;
  doc["vocab_size"] = corpus.vocab_size;
  doc["feature_dim"] = corpus.feature_dim;
  doc["vocabulary"] = corpus.vocabulary;
  auto& records = doc["records"] = json::array();
  for (const auto& r : corpus.records) {
    records.push_back({{"id", r.id},
                       {"duration_s", r.duration_s},
                       {"tokens", r.tokens},
                       {"noise_sigma", r.noise_sigma ? json(*r.noise_sigma)
                                                     : json(nullptr)},
                       {"frames", r.frames}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write corpus " + path.string());
  out << doc.dump() << '\n';
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus " + path.string());
  Corpus corpus;
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != "curriculum-corpus" || doc.at("version") != 1) {
      throw Error(ErrorKind::kParse,
                  path.string() + ": not a version-1 curriculum corpus file");
    }
    if (!doc.at("spec").is_null()) corpus.spec = spec_from_json(doc["spec"]);
    if (!doc.at("seed").is_null()) corpus.seed = doc["seed"].get<std::uint64_t>();
    corpus.frame_seconds = doc.at("frame_seconds").get<double>();
    corpus.vocab_size = doc.at("vocab_size").get<std::size_t>();
    corpus.feature_dim = doc.at("feature_dim").get<std::size_t>();
    corpus.vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& jr : doc.at("records")) {
      UtteranceRecord r;
      r.id = jr.at("id").get<std::string>();
      r.duration_s = jr.at("duration_s").get<double>();
      r.tokens = jr.at("tokens").get<std::vector<TokenId>>();
      if (!jr.at("noise_sigma").is_null()) {
        r.noise_sigma = jr["noise_sigma"].get<double>();
      }
      r.frames = jr.at("frames").get<std::vector<double>>();
      corpus.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  corpus.validate();
  return corpus;
}

std::vector<UtteranceRecord> segment_utterance(const UtteranceRecord& record,
                                               double max_duration_s,
                                               std::size_t feature_dim) {
  if (!(max_duration_s > 0.0)) {
    throw Error(ErrorKind::kValidation, "segment length must be positive");
  }
  if (record.duration_s <= max_duration_s) return {record};

  // The relative slack keeps exact multiples (20 s at 10 s) from spawning an
  // empty trailing chunk through rounding noise.
  const auto n_chunks = static_cast<std::size_t>(
      std::ceil(record.duration_s / max_duration_s * (1.0 - 1e-12)));

  std::vector<double> durations(n_chunks, max_duration_s);
  double consumed = 0.0;
  for (std::size_t k = 0; k + 1 < n_chunks; ++k) consumed += max_duration_s;
  durations.back() = record.duration_s - consumed;

  // Cumulative rounding of token boundaries; every chunk keeps at least one
  // token whenever there are enough tokens to go around.
  const std::size_t total = record.tokens.size();
  std::vector<std::size_t> bounds(n_chunks + 1, 0);
  bounds[n_chunks] = total;
  double cumulative = 0.0;
  for (std::size_t k = 1; k < n_chunks; ++k) {
    cumulative += durations[k - 1];
    auto b = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * cumulative / record.duration_s));
    if (total >= n_chunks) {
      b = std::clamp(b, bounds[k - 1] + 1, total - (n_chunks - k));
    } else {
      b = std::clamp(b, bounds[k - 1], total);
    }
    bounds[k] = b;
  }

  const std::size_t dim = record.has_frames() ? feature_dim : 0;
  std::vector<UtteranceRecord> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t k = 0; k < n_chunks; ++k) {
    UtteranceRecord chunk;
    chunk.id = fmt::format("{}-{}", record.id, k);
    chunk.duration_s = durations[k];
    chunk.noise_sigma = record.noise_sigma;
    chunk.tokens.assign(record.tokens.begin() + static_cast<std::ptrdiff_t>(bounds[k]),
                        record.tokens.begin() + static_cast<std::ptrdiff_t>(bounds[k + 1]));
    if (dim > 0) {
      chunk.frames.assign(
          record.frames.begin() + static_cast<std::ptrdiff_t>(bounds[k] * dim),
          record.frames.begin() + static_cast<std::ptrdiff_t>(bounds[k + 1] * dim));
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

Corpus segment_corpus(const Corpus& corpus, double max_duration_s) {
  Corpus out = corpus;
  out.records.clear();
  for (const auto& r : corpus.records) {
    auto chunks = segment_utterance(r, max_duration_s, corpus.feature_dim);
    for (auto& c : chunks) out.records.push_back(std::move(c));
  }
  out.validate();
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, double valid_fraction,
                         double test_fraction, std::uint64_t seed) {
  require(valid_fraction >= 0.0 && test_fraction >= 0.0 &&
              valid_fraction + test_fraction < 1.0,
          "split fractions must be nonnegative and sum to less than 1");
  const std::size_t n = corpus.size();
  const auto n_valid =
      static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(n)));
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  // 0 = train, 1 = valid, 2 = test
  std::vector<int> part(n, 0);
  for (std::size_t i = 0; i < n_valid; ++i) part[order[i]] = 1;
  for (std::size_t i = n_valid; i < n_valid + n_test && i < n; ++i) part[order[i]] = 2;

  CorpusSplit split{corpus, corpus, corpus};
  split.train.records.clear();
  split.valid.records.clear();
  split.test.records.clear();
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& dst = part[i] == 0 ? split.train : (part[i] == 1 ? split.valid : split.test);
    dst.records.push_back(corpus.records[i]);
  }
  return split;
}

}  // namespace curriculum
