#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clustem {

// Dense embedding of one attribute value. All entries are finite.
using Embedding = std::vector<double>;
using EmbeddingMap = std::map<std::string, Embedding>;

// Lowercases, turns '-', '_' and '/' into spaces, splits on whitespace.
std::vector<std::string> preprocess(std::string_view value);

// In-memory copy of a text word-vector file:
//   <count> <dim>
//   <token> <v1> ... <vdim>
class WordVectors {
 public:
  static WordVectors load(const std::filesystem::path& path);
  static WordVectors parse(std::string_view text);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  const Embedding* find(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Embedding> vectors_;
};

struct EmbeddingProviderConfig {
  enum class Kind { WordVectorFile, HttpApi };

  Kind kind = Kind::WordVectorFile;
  std::filesystem::path vectors_path;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "CLUSTEM_API_KEY";
  std::optional<std::filesystem::path> cache_path;

  // Throws ArgumentError when the selected source is incompletely configured.
  void validate() const;
  // Stable identifier recorded in run reports, e.g. "vectors:glove.txt".
  std::string id() const;
};

// Where vectors come from. fetch() returns one vector per input value, in
// input order, and is only ever handed at most batch_size() values.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::vector<Embedding> fetch(std::span<const std::string> values) = 0;
  virtual std::size_t batch_size() const = 0;
  virtual std::string id() const = 0;
};

// Averages the vectors of a value's in-vocabulary tokens. The vector file is
// read on first use.
class WordVectorSource : public EmbeddingSource {
 public:
  explicit WordVectorSource(std::filesystem::path path);
  explicit WordVectorSource(WordVectors vectors);

  std::vector<Embedding> fetch(std::span<const std::string> values) override;
  std::size_t batch_size() const override;
  std::string id() const override;

  Embedding embed(std::string_view value);

 private:
  const WordVectors& vectors();

  std::filesystem::path path_;
  std::optional<WordVectors> vectors_;
  std::mutex load_mutex_;
};

inline constexpr std::size_t kHttpBatchSize = 256;

// POST {"model", "input": [...]} and read {"data": [{"index", "embedding"}]}.
class HttpEmbeddingSource : public EmbeddingSource {
 public:
  HttpEmbeddingSource(std::string endpoint, std::string model, std::string api_key_env);

  std::vector<Embedding> fetch(std::span<const std::string> values) override;
  std::size_t batch_size() const override { return kHttpBatchSize; }
  std::string id() const override;

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_env_;
};

std::string build_embedding_request(std::string_view model, std::span<const std::string> values);
// Orders the response entries by "index" and checks there is exactly one per
// requested value. Throws ProviderError on anything malformed.
std::vector<Embedding> parse_embedding_response(std::string_view body, std::size_t expected);

// Cache-fronted access to a source. Thread-safe.
class EmbeddingService {
 public:
  explicit EmbeddingService(std::unique_ptr<EmbeddingSource> source,
                            std::optional<std::filesystem::path> cache_path = std::nullopt);

  Embedding embed_value(const std::string& value);
  // One vector per value; values must be distinct. Missing values are fetched
  // in batches of the source's batch size and the cache file is rewritten.
  EmbeddingMap embed_all(std::span<const std::string> values);

  std::string source_id() const { return source_->id(); }
  std::size_t cached_count() const;

 private:
  void fetch_missing(const std::vector<std::string>& missing);
  void check_dim(const std::string& value, const Embedding& e);
  void persist();

  std::unique_ptr<EmbeddingSource> source_;
  std::optional<std::filesystem::path> cache_path_;
  mutable std::mutex mutex_;
  std::map<std::string, Embedding> cache_;
  std::optional<std::size_t> dim_;
};

std::unique_ptr<EmbeddingSource> make_source(const EmbeddingProviderConfig& config);
std::unique_ptr<EmbeddingService> make_service(const EmbeddingProviderConfig& config);

// Cache file is a JSON object value -> array of numbers.
std::map<std::string, Embedding> read_embedding_cache(const std::filesystem::path& path);
void write_embedding_cache(const std::map<std::string, Embedding>& cache,
                           const std::filesystem::path& path);

}  // namespace clustem
