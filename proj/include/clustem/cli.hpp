#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clustem/anonymize.hpp"
#include "clustem/embed.hpp"

namespace clustem::cli {

enum ExitCode : int {
  kOk = 0,
  kUnsatisfiable = 1,
  kConfigError = 2,
  kProviderError = 3,
};

// k values swept when --k-sweep is given.
inline const std::vector<int> kDefaultSweep = {2, 5, 10, 15, 20, 25, 30, 50, 100, 150, 200};

// Everything one anonymization run needs. Loaded from the JSON config file
// and then overridden by flags.
struct RunConfig {
  std::filesystem::path input;
  QiSpec qi;
  std::vector<int> ks = {2};
  int l = 1;
  double sup_limit = 0.0;
  ClusterMethod method = ClusterMethod::WardAgglomerative;
  std::uint64_t seed = 42;
  std::map<std::string, std::filesystem::path> hierarchies;
  std::optional<EmbeddingProviderConfig> provider;
  std::filesystem::path out_dir;
};

// Reads {"qi", "sa", "k", "l", "sup_limit", "method", "seed", "hierarchies"}.
// "k" may be a number or an array. Relative hierarchy paths resolve against
// the config file's directory.
void apply_config_file(const std::filesystem::path& path, RunConfig& config);

// Entry point shared by the executable and the tests. argv[0] is the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clustem::cli
