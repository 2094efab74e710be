#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "clustem/embed.hpp"
#include "clustem/error.hpp"
#include "temp_dir.hpp"

using namespace clustem;

namespace {

const char* kVectors =
    "4 2\n"
    "exec 1 0\n"
    "managerial 0 1\n"
    "private 0.25 -2\n"
    "state 3 3\n";

class CountingSource : public EmbeddingSource {
 public:
  std::vector<Embedding> fetch(std::span<const std::string> values) override {
    ++calls;
    fetched += values.size();
    std::vector<Embedding> out;
    for (const auto& v : values) out.push_back({static_cast<double>(v.size()), 1.0 / 3.0});
    return out;
  }
  std::size_t batch_size() const override { return 4; }
  std::string id() const override { return "counting"; }

  int calls = 0;
  std::size_t fetched = 0;
};

// Minimal embeddings endpoint: the vector for input i is {len(value), i}.
class MockEndpoint {
 public:
  MockEndpoint() {
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      ++posts;
      last_auth = req.get_header_value("Authorization");
      auto body = nlohmann::json::parse(req.body);
      nlohmann::json data = nlohmann::json::array();
      const auto& input = body["input"];
      largest_batch = std::max(largest_batch.load(), input.size());
      // Answer in reverse order to exercise index-based reassembly.
      for (std::size_t i = input.size(); i-- > 0;) {
        double len = static_cast<double>(input[i].get<std::string>().size());
        data.push_back({{"index", i}, {"embedding", {len, static_cast<double>(i)}}});
      }
      res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("nope", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "/v1/embeddings") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  std::atomic<int> posts{0};
  std::atomic<std::size_t> largest_batch{0};
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::vector<std::string> numbered(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("value-" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("preprocess splits on hyphen, underscore, slash and whitespace") {
  CHECK(preprocess("Exec-managerial") == std::vector<std::string>{"exec", "managerial"});
  CHECK(preprocess("Private") == std::vector<std::string>{"private"});
  CHECK(preprocess("Outlying-US(Guam-USVI-etc)") ==
        std::vector<std::string>{"outlying", "us(guam", "usvi", "etc)"});
  CHECK(preprocess("a_b/c  d\te") == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(preprocess("--").empty());
}

TEST_CASE("word vectors average in-vocabulary tokens") {
  WordVectorSource source(WordVectors::parse(kVectors));
  CHECK(source.embed("Private") == Embedding{0.25, -2.0});
  CHECK(source.embed("Exec-managerial") == Embedding{0.5, 0.5});
  CHECK(source.embed("Exec-unknownword") == Embedding{1.0, 0.0});
  CHECK_THROWS_AS(source.embed("Never-worked"), OovError);
}

TEST_CASE("malformed word-vector files are rejected") {
  CHECK_THROWS_AS(WordVectors::parse("2 2\nexec 1\n"), ProviderError);
  CHECK_THROWS_AS(WordVectors::parse("x y\n"), ProviderError);
  CHECK_THROWS_AS(WordVectors::parse("1 2\nexec 1 abc\n"), ProviderError);
}

TEST_CASE("word-vector file loaded from disk") {
  testutil::TempDir dir;
  testutil::write_file(dir / "v.txt", kVectors);
  auto vectors = WordVectors::load(dir / "v.txt");
  CHECK(vectors.dim() == 2);
  CHECK(vectors.size() == 4);
  REQUIRE(vectors.find("state") != nullptr);
  CHECK(*vectors.find("state") == Embedding{3.0, 3.0});
}

TEST_CASE("service serves repeats from its cache") {
  auto owned = std::make_unique<CountingSource>();
  auto* source = owned.get();
  EmbeddingService service(std::move(owned));

  auto first = service.embed_value("Private");
  CHECK(source->calls == 1);
  CHECK(service.embed_value("Private") == first);
  CHECK(source->calls == 1);

  CHECK(service.embed_all({}).empty());
  auto values = numbered(10);
  auto all = service.embed_all(values);
  CHECK(all.size() == 10);
  CHECK(source->calls == 1 + 3);  // 10 values in batches of 4
  service.embed_all(values);
  CHECK(source->calls == 4);
  CHECK_THROWS_AS(service.embed_all(std::vector<std::string>{"a", "a"}), ArgumentError);
}

TEST_CASE("cache file persists and reproduces identical vectors") {
  testutil::TempDir dir;
  auto values = numbered(7);
  EmbeddingMap uncached;
  {
    EmbeddingService plain(std::make_unique<CountingSource>());
    uncached = plain.embed_all(values);
  }
  {
    EmbeddingService writer(std::make_unique<CountingSource>(), dir / "cache.json");
    CHECK(writer.embed_all(values) == uncached);
  }
  CHECK(read_embedding_cache(dir / "cache.json").size() == 7);

  auto owned = std::make_unique<CountingSource>();
  auto* source = owned.get();
  EmbeddingService reader(std::move(owned), dir / "cache.json");
  CHECK(reader.cached_count() == 7);
  CHECK(reader.embed_all(values) == uncached);
  CHECK(source->calls == 0);
}

TEST_CASE("inconsistent dimensions are rejected") {
  class Ragged : public CountingSource {
    std::vector<Embedding> fetch(std::span<const std::string> values) override {
      std::vector<Embedding> out;
      for (const auto& v : values) out.push_back(Embedding(v.size(), 1.0));
      return out;
    }
  };
  EmbeddingService service(std::make_unique<Ragged>());
  CHECK_THROWS_AS(service.embed_all(std::vector<std::string>{"a", "bb"}), ConsistencyError);
}

TEST_CASE("embedding response parsing") {
  auto v = parse_embedding_response(
      R"({"data":[{"index":1,"embedding":[3,4]},{"index":0,"embedding":[1,2]}]})", 2);
  CHECK(v == std::vector<Embedding>{{1, 2}, {3, 4}});
  CHECK_THROWS_AS(parse_embedding_response("not json", 1), ProviderError);
  CHECK_THROWS_AS(parse_embedding_response(R"({"data":[]})", 1), ProviderError);
  CHECK_THROWS_AS(parse_embedding_response(R"({"data":[{"index":0,"embedding":[1]},{"index":0,"embedding":[1]}]})", 2),
                  ProviderError);
  auto request = nlohmann::json::parse(build_embedding_request("m", std::vector<std::string>{"a", "b"}));
  CHECK(request["model"] == "m");
  CHECK(request["input"] == nlohmann::json::array({"a", "b"}));
}

TEST_CASE("http provider batches at 256 and caches") {
  MockEndpoint endpoint;
  testutil::TempDir dir;
  ::setenv("CLUSTEM_TEST_KEY", "secret", 1);

  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::HttpApi;
  config.endpoint = endpoint.url();
  config.model = "test-model";
  config.api_key_env = "CLUSTEM_TEST_KEY";
  config.cache_path = dir / "cache.json";

  auto values = numbered(300);
  auto service = make_service(config);
  auto first = service->embed_all(values);
  CHECK(endpoint.posts == 2);
  CHECK(endpoint.largest_batch == 256);
  CHECK(endpoint.last_auth == "Bearer secret");
  CHECK(first.at("value-0") == Embedding{7.0, 0.0});
  CHECK(first.at("value-299") == Embedding{9.0, 299.0 - 256.0});

  service->embed_all(values);
  CHECK(endpoint.posts == 2);

  auto reloaded = make_service(config);
  CHECK(reloaded->embed_all(values) == first);
  CHECK(endpoint.posts == 2);
}

TEST_CASE("http errors surface as provider errors") {
  MockEndpoint endpoint;
  EmbeddingService service(std::make_unique<HttpEmbeddingSource>(endpoint.url("/broken"), "m", "UNSET_VAR_X"));
  CHECK_THROWS_AS(service.embed_value("x"), ProviderError);
  EmbeddingService nowhere(std::make_unique<HttpEmbeddingSource>("http://127.0.0.1:1/e", "m", "UNSET_VAR_X"));
  CHECK_THROWS_AS(nowhere.embed_value("x"), ProviderError);
}

TEST_CASE("provider config validation") {
  EmbeddingProviderConfig c;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.kind = EmbeddingProviderConfig::Kind::HttpApi;
  c.endpoint = "http://x/e";
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.model = "m";
  CHECK_NOTHROW(c.validate());
}
