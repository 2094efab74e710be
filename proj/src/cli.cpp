#include "clustem/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clustem/efficacy.hpp"
#include "clustem/error.hpp"
#include "clustem/metrics.hpp"
#include "clustem/tabular.hpp"
#include "clustem/vgh.hpp"

namespace clustem::cli {

using nlohmann::json;

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      int k = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw ArgumentError("invalid k value '" + item + "'");
    }
  }
  if (ks.empty()) throw ArgumentError("--k needs at least one value");
  return ks;
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Flags naming an embedding source, shared by `vgh build` and `anonymize`.
struct ProviderFlags {
  std::string vectors;
  std::string endpoint;
  std::string model;
  std::string key_env = "CLUSTEM_API_KEY";
  std::string cache;

  void attach(CLI::App* cmd) {
    cmd->add_option("--vectors", vectors, "Word-vector text file (averaged token vectors)");
    cmd->add_option("--api-endpoint", endpoint, "Embeddings HTTP endpoint");
    cmd->add_option("--api-model", model, "Model name sent to the endpoint");
    cmd->add_option("--api-key-env", key_env, "Environment variable holding the bearer token")
        ->capture_default_str();
    cmd->add_option("--cache", cache, "JSON embedding cache file");
  }

  std::optional<EmbeddingProviderConfig> config() const {
    if (!vectors.empty() && !endpoint.empty()) {
      throw ArgumentError("give either --vectors or --api-endpoint, not both");
    }
    if (vectors.empty() && endpoint.empty()) return std::nullopt;
    EmbeddingProviderConfig c;
    if (!vectors.empty()) {
      c.kind = EmbeddingProviderConfig::Kind::WordVectorFile;
      c.vectors_path = vectors;
    } else {
      c.kind = EmbeddingProviderConfig::Kind::HttpApi;
      c.endpoint = endpoint;
      c.model = model;
      c.api_key_env = key_env;
    }
    if (!cache.empty()) c.cache_path = cache;
    c.validate();
    return c;
  }
};

json run_metadata(const RunConfig& config, const std::string& provider_id, const std::string& started) {
  json meta;
  meta["seed"] = config.seed;
  meta["method"] = to_string(config.method);
  meta["provider"] = provider_id;
  meta["qi"] = config.qi.qi;
  meta["sa"] = config.qi.sa ? json(*config.qi.sa) : json(nullptr);
  meta["started_at"] = started;
  meta["finished_at"] = utc_now();
  return meta;
}

std::string provider_id(const RunConfig& config) {
  return config.provider ? config.provider->id() : "hierarchy-files";
}

// ---------------------------------------------------------------------------

int cmd_vgh_build(const std::string& input, const std::vector<std::string>& columns,
                  const ProviderFlags& flags, const std::string& method, std::uint64_t seed,
                  const std::string& out_dir, std::ostream& out) {
  auto provider = flags.config();
  if (!provider) throw ArgumentError("an embedding source is required (--vectors or --api-endpoint)");
  if (columns.empty()) throw ArgumentError("--columns is empty");
  auto cluster_method = parse_method(method);
  Table table = load_csv(input);
  QiSpec qi{columns, std::nullopt};
  qi.validate(table);

  auto service = make_service(*provider);
  auto vghs = generate_vghs(table, qi, *service, cluster_method, seed);
  make_dir(out_dir);
  for (const auto& name : columns) {
    auto path = std::filesystem::path(out_dir) / (name + ".csv");
    write_hierarchy(vghs.at(name), path);
    out << "wrote " << path.string() << " (" << vghs.at(name).level_count() << " levels)\n";
  }
  return kOk;
}

int cmd_anonymize(RunConfig config, std::ostream& out) {
  const std::string started = utc_now();
  Table table = load_csv(config.input);
  config.qi.validate(table);
  for (int k : config.ks) PrivacyParams{k, config.l, config.sup_limit}.validate();

  VghSet vghs;
  bool all_overridden = std::all_of(config.qi.qi.begin(), config.qi.qi.end(), [&](const auto& q) {
    return config.hierarchies.count(q) > 0;
  });
  if (all_overridden) {
    for (const auto& q : config.qi.qi) {
      auto vgh = read_hierarchy(config.hierarchies.at(q));
      vghs.emplace(q, Vgh(q, vgh.leaves(), vgh.levels()));
    }
  } else {
    if (!config.provider) {
      throw ArgumentError("an embedding source is required unless every QI has a --hierarchy");
    }
    auto service = make_service(*config.provider);
    vghs = generate_vghs(table, config.qi, *service, config.method, config.seed, config.hierarchies);
  }

  bool all_satisfied = true;
  for (int k : config.ks) {
    PrivacyParams params{k, config.l, config.sup_limit};
    auto dir = config.ks.size() == 1 ? config.out_dir : config.out_dir / ("k_" + std::to_string(k));
    make_dir(dir / "hierarchies");
    for (const auto& [name, vgh] : vghs) write_hierarchy(vgh, dir / "hierarchies" / (name + ".csv"));

    auto result = search(table, config.qi, vghs, params);
    write_csv(result.table, dir / "anonymized.csv");

    json report = to_json(measure(result, config.qi, params));
    report["run"] = run_metadata(config, provider_id(config), started);
    report["search"] = {{"lattice_size", result.stats.lattice_size},
                        {"checked", result.stats.checked},
                        {"tagged", result.stats.tagged},
                        {"satisfying", result.stats.satisfying}};
    write_json(report, dir / "report.json");

    out << "k=" << k << ": node " << result.node.to_string()
        << (result.satisfied ? " satisfied" : " UNSATISFIABLE") << ", "
        << std::count(result.retained.begin(), result.retained.end(), true) << "/"
        << table.row_count() << " rows retained -> " << dir.string() << '\n';
    all_satisfied = all_satisfied && result.satisfied;
  }
  return all_satisfied ? kOk : kUnsatisfiable;
}

struct EvaluateFlags {
  std::string input;
  std::string test;
  std::string qi;
  std::string sa;
  std::string label;
  std::string positive = ">50K";
  std::string features = "extended";
  std::string hierarchy_dir;
  std::string out;
  std::optional<int> k;
  int l = 1;
  double sup_limit = 0.0;
  std::uint64_t seed = 42;
};

int cmd_evaluate(const EvaluateFlags& flags, std::ostream& out) {
  const std::string started = utc_now();
  Table train = load_csv(flags.input);
  QiSpec qi{split_list(flags.qi), flags.sa.empty() ? std::nullopt : std::optional(flags.sa)};
  qi.validate(train);

  auto retained = infer_retained(train, qi);
  PrivacyParams requested{flags.k.value_or(1), flags.l, flags.sup_limit};
  requested.validate();
  auto metrics = measure(train, qi, retained, requested);
  json report = to_json(metrics);
  if (!flags.k) report.erase("requested");

  if (!flags.test.empty()) {
    Table test = load_csv(flags.test);
    EncodeOptions options;
    options.nominal = qi.qi;
    if (flags.features == "extended") {
      for (const char* name : {"capital-gain", "capital-loss", "hours-per-week"}) {
        if (train.has_column(name)) options.numeric.push_back(name);
      }
    } else if (flags.features != "qi") {
      throw ArgumentError("--features must be 'extended' or 'qi'");
    }
    options.label = flags.label.empty() ? flags.sa : flags.label;
    if (options.label.empty()) throw ArgumentError("--label (or --sa) names the prediction target");
    options.positive_class = flags.positive;

    std::vector<AttributeDomain> domains;
    for (const auto& name : qi.qi) {
      auto path = std::filesystem::path(flags.hierarchy_dir) / (name + ".csv");
      if (!flags.hierarchy_dir.empty() && std::filesystem::exists(path)) {
        auto vgh = read_hierarchy(path);
        domains.push_back(AttributeDomain::from_vgh(Vgh(name, vgh.leaves(), vgh.levels())));
      } else {
        domains.push_back(AttributeDomain::from_values(name, train.column(name).values));
      }
    }
    auto data = encode(train, test, options, domains);
    auto model = train_classifier(data.train, flags.seed);
    auto eff = evaluate(model, data.test, options.positive_class);
    report["efficacy"] = {{"accuracy", eff.accuracy},
                          {"f1", eff.f1},
                          {"positive_class", eff.positive_class},
                          {"encoded_width", data.train.cols()},
                          {"unseen_test_cells", data.unseen_test_cells}};
    out << "accuracy " << eff.accuracy << ", F1 " << eff.f1 << '\n';
  }

  json meta;
  meta["seed"] = flags.seed;
  meta["input"] = std::filesystem::path(flags.input).filename().string();
  meta["started_at"] = started;
  meta["finished_at"] = utc_now();
  report["run"] = meta;

  out << "achieved k=" << metrics.achieved_k << ", perc_recs=" << metrics.perc_recs
      << ", c_avg=" << metrics.c_avg << '\n';
  if (flags.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    auto parent = std::filesystem::path(flags.out).parent_path();
    if (!parent.empty()) make_dir(parent);
    write_json(report, flags.out);
  }
  return kOk;
}

int exit_code_for(const Error& e) {
  return e.category() == ErrorCategory::Provider ? kProviderError : kConfigError;
}

}  // namespace

void apply_config_file(const std::filesystem::path& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    if (doc.contains("qi")) config.qi.qi = doc["qi"].get<std::vector<std::string>>();
    if (doc.contains("sa") && !doc["sa"].is_null()) config.qi.sa = doc["sa"].get<std::string>();
    if (doc.contains("k")) {
      config.ks = doc["k"].is_array() ? doc["k"].get<std::vector<int>>()
                                      : std::vector<int>{doc["k"].get<int>()};
    }
    if (doc.contains("l")) config.l = doc["l"].get<int>();
    if (doc.contains("sup_limit")) config.sup_limit = doc["sup_limit"].get<double>();
    if (doc.contains("method")) config.method = parse_method(doc["method"].get<std::string>());
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("hierarchies")) {
      for (auto& [attr, p] : doc["hierarchies"].items()) {
        std::filesystem::path file = p.get<std::string>();
        if (file.is_relative()) file = path.parent_path() / file;
        config.hierarchies[attr] = file;
      }
    }
  } catch (const json::exception& e) {
    throw ArgumentError("config '" + path.string() + "': " + e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding-driven hierarchy generation and k-anonymization"};
  app.require_subcommand(1);

  // vgh build
  auto* vgh_cmd = app.add_subcommand("vgh", "Value generalization hierarchies");
  vgh_cmd->require_subcommand(1);
  auto* build = vgh_cmd->add_subcommand("build", "Generate hierarchies from embeddings");
  std::string b_input, b_columns, b_method = "ward", b_out;
  std::uint64_t b_seed = 42;
  ProviderFlags b_provider;
  build->add_option("--input", b_input, "Input CSV")->required();
  build->add_option("--columns", b_columns, "Comma-separated nominal columns")->required();
  build->add_option("--method", b_method, "kmeans or ward")->capture_default_str();
  build->add_option("--seed", b_seed, "Random seed")->capture_default_str();
  build->add_option("--out-dir", b_out, "Directory for <column>.csv hierarchy files")->required();
  b_provider.attach(build);

  // anonymize
  auto* anon = app.add_subcommand("anonymize", "Generate hierarchies and anonymize a table");
  std::string a_input, a_config, a_qi, a_sa, a_k, a_method, a_out;
  std::optional<int> a_l;
  std::optional<double> a_sup;
  std::optional<std::uint64_t> a_seed;
  bool a_sweep = false;
  std::vector<std::string> a_hier;
  ProviderFlags a_provider;
  anon->add_option("--input", a_input, "Input CSV")->required();
  anon->add_option("--config", a_config, "JSON run configuration");
  anon->add_option("--qi", a_qi, "Comma-separated QI columns");
  anon->add_option("--sa", a_sa, "Sensitive column");
  anon->add_option("--k", a_k, "k value or comma-separated sweep");
  anon->add_flag("--k-sweep", a_sweep, "Sweep k over 2,5,10,15,20,25,30,50,100,150,200");
  anon->add_option("--l", a_l, "Distinct l-diversity");
  anon->add_option("--sup-limit", a_sup, "Maximum fraction of suppressed records");
  anon->add_option("--method", a_method, "kmeans or ward");
  anon->add_option("--seed", a_seed, "Random seed");
  anon->add_option("--hierarchy", a_hier, "attr=path; use this hierarchy file for attr");
  anon->add_option("--out", a_out, "Output directory")->required();
  a_provider.attach(anon);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Privacy, utility and ML-efficacy report");
  EvaluateFlags e;
  eval->add_option("--input", e.input, "Anonymized (or original) training CSV")->required();
  eval->add_option("--test", e.test, "Original test CSV for ML efficacy");
  eval->add_option("--qi", e.qi, "Comma-separated QI columns")->required();
  eval->add_option("--sa", e.sa, "Sensitive column");
  eval->add_option("--label", e.label, "Prediction target (defaults to --sa)");
  eval->add_option("--positive-class", e.positive, "Positive class for F1")->capture_default_str();
  eval->add_option("--features", e.features, "'extended' (QI + numeric) or 'qi'")->capture_default_str();
  eval->add_option("--hierarchies", e.hierarchy_dir, "Directory of <attr>.csv hierarchy files");
  eval->add_option("--k", e.k, "Requested k (enables c_avg against it)");
  eval->add_option("--l", e.l, "Requested l");
  eval->add_option("--sup-limit", e.sup_limit, "Requested suppression limit");
  eval->add_option("--seed", e.seed, "Classifier seed")->capture_default_str();
  eval->add_option("--out", e.out, "Report path (stdout when omitted)");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.push_back("clustem");
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    return kConfigError;
  }

  try {
    if (build->parsed()) {
      return cmd_vgh_build(b_input, split_list(b_columns), b_provider, b_method, b_seed, b_out, out);
    }
    if (anon->parsed()) {
      RunConfig config;
      config.input = a_input;
      config.out_dir = a_out;
      if (!a_config.empty()) apply_config_file(a_config, config);
      if (!a_qi.empty()) config.qi.qi = split_list(a_qi);
      if (!a_sa.empty()) config.qi.sa = a_sa;
      if (a_sweep) config.ks = kDefaultSweep;
      if (!a_k.empty()) config.ks = parse_ks(a_k);
      if (a_l) config.l = *a_l;
      if (a_sup) config.sup_limit = *a_sup;
      if (!a_method.empty()) config.method = parse_method(a_method);
      if (a_seed) config.seed = *a_seed;
      for (const auto& item : a_hier) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ArgumentError("--hierarchy expects attr=path, got '" + item + "'");
        }
        config.hierarchies[item.substr(0, eq)] = item.substr(eq + 1);
      }
      config.provider = a_provider.config();
      return cmd_anonymize(std::move(config), out);
    }
    if (eval->parsed()) return cmd_evaluate(e, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace clustem::cli
