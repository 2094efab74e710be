#include "clustem/embed.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "clustem/error.hpp"

namespace clustem {

using nlohmann::json;

std::vector<std::string> preprocess(std::string_view value) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : value) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (c == '-' || c == '_' || c == '/' || std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------
// WordVectors

WordVectors WordVectors::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProviderError("cannot open word-vector file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

WordVectors WordVectors::parse(std::string_view text) {
  WordVectors out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ProviderError("word-vector file is empty");
  {
    std::istringstream header(line);
    long long count = -1, dim = -1;
    if (!(header >> count >> dim) || count < 0 || dim <= 0) {
      throw ProviderError("word-vector header must be '<count> <dim>', got '" + line + "'");
    }
    out.dim_ = static_cast<std::size_t>(dim);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    Embedding v;
    v.reserve(out.dim_);
    std::string number;
    while (fields >> number) {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), x);
      if (ec != std::errc{} || ptr != number.data() + number.size() || !std::isfinite(x)) {
        throw ProviderError("word-vector line " + std::to_string(line_no) + ": bad number '" +
                            number + "'");
      }
      v.push_back(x);
    }
    if (v.size() != out.dim_) {
      throw ProviderError("word-vector line " + std::to_string(line_no) + ": expected " +
                          std::to_string(out.dim_) + " components, found " +
                          std::to_string(v.size()));
    }
    // First occurrence wins, as in the common loaders.
    out.vectors_.emplace(std::move(token), std::move(v));
  }
  return out;
}

const Embedding* WordVectors::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Provider config

void EmbeddingProviderConfig::validate() const {
  switch (kind) {
    case Kind::WordVectorFile:
      if (vectors_path.empty()) throw ArgumentError("word-vector provider needs a vectors file");
      break;
    case Kind::HttpApi:
      if (endpoint.empty()) throw ArgumentError("HTTP embedding provider needs an endpoint");
      if (model.empty()) throw ArgumentError("HTTP embedding provider needs a model name");
      break;
  }
}

std::string EmbeddingProviderConfig::id() const {
  if (kind == Kind::WordVectorFile) return "vectors:" + vectors_path.filename().string();
  return "api:" + model + "@" + endpoint;
}

// ---------------------------------------------------------------------------
// WordVectorSource

WordVectorSource::WordVectorSource(std::filesystem::path path) : path_(std::move(path)) {}

WordVectorSource::WordVectorSource(WordVectors vectors) : vectors_(std::move(vectors)) {}

const WordVectors& WordVectorSource::vectors() {
  std::lock_guard lock(load_mutex_);
  if (!vectors_) vectors_ = WordVectors::load(path_);
  return *vectors_;
}

Embedding WordVectorSource::embed(std::string_view value) {
  const auto& table = vectors();
  Embedding sum(table.dim(), 0.0);
  std::size_t found = 0;
  for (const auto& token : preprocess(value)) {
    const Embedding* v = table.find(token);
    if (!v) continue;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
    ++found;
  }
  if (found == 0) {
    throw OovError("no token of value '" + std::string(value) + "' is in the vocabulary");
  }
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

std::vector<Embedding> WordVectorSource::fetch(std::span<const std::string> values) {
  std::vector<Embedding> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(embed(v));
  return out;
}

std::size_t WordVectorSource::batch_size() const { return 1024; }

std::string WordVectorSource::id() const {
  return path_.empty() ? "vectors:<memory>" : "vectors:" + path_.filename().string();
}

// ---------------------------------------------------------------------------
// HttpEmbeddingSource

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ArgumentError("endpoint '" + url + "' lacks a scheme");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpEmbeddingSource::HttpEmbeddingSource(std::string endpoint, std::string model,
                                         std::string api_key_env)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_env_(std::move(api_key_env)) {}

std::string HttpEmbeddingSource::id() const { return "api:" + model_ + "@" + endpoint_; }

std::string build_embedding_request(std::string_view model, std::span<const std::string> values) {
  json body;
  body["model"] = std::string(model);
  body["input"] = json::array();
  for (const auto& v : values) body["input"].push_back(v);
  return body.dump();
}

std::vector<Embedding> parse_embedding_response(std::string_view body, std::size_t expected) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embedding response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    throw ProviderError("embedding response lacks a 'data' array");
  }
  const auto& data = doc["data"];
  if (data.size() != expected) {
    throw ProviderError("embedding response has " + std::to_string(data.size()) +
                        " entries, expected " + std::to_string(expected));
  }
  std::vector<std::optional<Embedding>> slots(expected);
  for (const auto& item : data) {
    if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
        !item.contains("embedding") || !item["embedding"].is_array()) {
      throw ProviderError("malformed entry in embedding response");
    }
    auto index = item["index"].get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= expected) {
      throw ProviderError("embedding index " + std::to_string(index) + " out of range");
    }
    auto& slot = slots[static_cast<std::size_t>(index)];
    if (slot) throw ProviderError("duplicate embedding index " + std::to_string(index));
    Embedding v;
    v.reserve(item["embedding"].size());
    for (const auto& x : item["embedding"]) {
      if (!x.is_number()) throw ProviderError("non-numeric embedding component");
      double d = x.get<double>();
      if (!std::isfinite(d)) throw ProviderError("non-finite embedding component");
      v.push_back(d);
    }
    if (v.empty()) throw ProviderError("empty embedding at index " + std::to_string(index));
    slot = std::move(v);
  }
  std::vector<Embedding> out;
  out.reserve(expected);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<Embedding> HttpEmbeddingSource::fetch(std::span<const std::string> values) {
  auto url = split_url(endpoint_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);

  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(url.path, headers, build_embedding_request(model_, values),
                         "application/json");
  if (!res) {
    throw ProviderError("request to '" + endpoint_ + "' failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  return parse_embedding_response(res->body, values.size());
}

// ---------------------------------------------------------------------------
// Cache file

std::map<std::string, Embedding> read_embedding_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding cache '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("embedding cache '" + path.string() + "' is not JSON: " + e.what());
  }
  if (!doc.is_object()) throw FormatError("embedding cache must be a JSON object");
  std::map<std::string, Embedding> out;
  for (auto& [key, value] : doc.items()) {
    if (!value.is_array()) throw FormatError("cache entry '" + key + "' is not an array");
    out.emplace(key, value.get<Embedding>());
  }
  return out;
}

void write_embedding_cache(const std::map<std::string, Embedding>& cache,
                           const std::filesystem::path& path) {
  json doc = json::object();
  for (const auto& [k, v] : cache) doc[k] = v;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write embedding cache '" + tmp.string() + "'");
    out << doc.dump();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move cache into place: " + ec.message());
}

// ---------------------------------------------------------------------------
// EmbeddingService

EmbeddingService::EmbeddingService(std::unique_ptr<EmbeddingSource> source,
                                   std::optional<std::filesystem::path> cache_path)
    : source_(std::move(source)), cache_path_(std::move(cache_path)) {
  if (cache_path_ && std::filesystem::exists(*cache_path_)) {
    cache_ = read_embedding_cache(*cache_path_);
    for (const auto& [value, e] : cache_) check_dim(value, e);
  }
}

void EmbeddingService::check_dim(const std::string& value, const Embedding& e) {
  if (!dim_) {
    dim_ = e.size();
  } else if (*dim_ != e.size()) {
    throw ConsistencyError("embedding of '" + value + "' has dimension " +
                           std::to_string(e.size()) + ", expected " + std::to_string(*dim_));
  }
}

std::size_t EmbeddingService::cached_count() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void EmbeddingService::fetch_missing(const std::vector<std::string>& missing) {
  const std::size_t batch = std::max<std::size_t>(1, source_->batch_size());
  std::map<std::string, Embedding> fetched;
  for (std::size_t start = 0; start < missing.size(); start += batch) {
    std::size_t len = std::min(batch, missing.size() - start);
    std::span<const std::string> chunk(missing.data() + start, len);
    auto vectors = source_->fetch(chunk);
    if (vectors.size() != len) {
      throw ProviderError("embedding source returned " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(len) + " values");
    }
    for (std::size_t i = 0; i < len; ++i) fetched.emplace(chunk[i], std::move(vectors[i]));
  }
  // Commit only once everything arrived, so a failed call leaves no partial state.
  auto saved_dim = dim_;
  try {
    for (const auto& [value, e] : fetched) check_dim(value, e);
  } catch (...) {
    dim_ = saved_dim;
    throw;
  }
  for (auto& [value, e] : fetched) cache_.insert_or_assign(value, std::move(e));
  if (!fetched.empty()) persist();
}

void EmbeddingService::persist() {
  if (cache_path_) write_embedding_cache(cache_, *cache_path_);
}

Embedding EmbeddingService::embed_value(const std::string& value) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(value); it != cache_.end()) return it->second;
  fetch_missing({value});
  return cache_.at(value);
}

EmbeddingMap EmbeddingService::embed_all(std::span<const std::string> values) {
  std::set<std::string> seen;
  for (const auto& v : values) {
    if (!seen.insert(v).second) throw ArgumentError("duplicate value '" + v + "' in embed_all");
  }
  std::lock_guard lock(mutex_);
  std::vector<std::string> missing;
  for (const auto& v : values) {
    if (!cache_.count(v)) missing.push_back(v);
  }
  fetch_missing(missing);
  EmbeddingMap out;
  for (const auto& v : values) out.emplace(v, cache_.at(v));
  return out;
}

std::unique_ptr<EmbeddingSource> make_source(const EmbeddingProviderConfig& config) {
  config.validate();
  if (config.kind == EmbeddingProviderConfig::Kind::WordVectorFile) {
    return std::make_unique<WordVectorSource>(config.vectors_path);
  }
  return std::make_unique<HttpEmbeddingSource>(config.endpoint, config.model, config.api_key_env);
}

std::unique_ptr<EmbeddingService> make_service(const EmbeddingProviderConfig& config) {
  return std::make_unique<EmbeddingService>(make_source(config), config.cache_path);
}

}  // namespace clustem
