#ifndef GMC_CLI_CONFIG_HPP
#define GMC_CLI_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/common.hpp"
#include "gmc/domain.hpp"
#include "gmc/kernel.hpp"
#include "gmc/rng.hpp"

namespace gmc::cli {

/// Configuration error; the CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command needs. Keys of the serialized form:
///
///   dim, n, lo, hi, density          grid on [lo, hi]^dim with n cells per axis
///   kernel                           kahane | log | zero | explicit
///   C, gamma, g                      kernel parameters (g: additive constant, log only)
///   matrix                           explicit entries, rows separated by ';'
///   mollifiers                       pair compared by the eps sweep, e.g. box,triangle
///   eps_ladder, gamma_ladder         sweep ladders (comma separated)
///   replicas, seed, stream           ensemble size and master seed record
///   suite                            verification suites (comma separated)
///   z, bonferroni                    acceptance threshold, multiple-testing option
///   out                              output directory
///   export_limit                     max per-replica CSV files
///   pairs                            cell pairs i:j for the chaos summary
struct RunConfig {
  int dim = 1;
  Index n = 64;
  double lo = 0.0;
  double hi = 1.0;
  std::string density = "lebesgue";
  std::string kernel = "kahane";
  double C = 16.0;
  double gamma = 1.0;
  double g = 0.0;
  std::optional<Matrix> matrix;
  std::vector<std::string> mollifiers = {"box", "triangle"};
  std::vector<double> eps_ladder;
  std::vector<double> gamma_ladder;
  /// Unset means each command's default (suites keep their own sizes).
  std::optional<std::int64_t> replicas;
  std::uint64_t seed = 7;
  std::uint64_t stream = 0;
  std::vector<std::string> suite;
  double z = 3.0;
  bool bonferroni = false;
  std::string out = "gmc_out";
  std::int64_t export_limit = 1000;
  std::vector<std::pair<Index, Index>> pairs;

  SeedRecord seed_record() const { return {seed, stream}; }
  std::int64_t replicas_or(std::int64_t dflt) const { return replicas.value_or(dflt); }
};

/// Canonical serialization (every key present).
nlohmann::json to_json(const RunConfig& c);
/// Throws ConfigError on unknown keys, bad types or failed validation.
RunConfig config_from_json(const nlohmann::json& doc);

/// Converts one key=value pair into its JSON value.
nlohmann::json parse_value(const std::string& key, const std::string& value);
/// key = value lines; '#' starts a comment.
nlohmann::json parse_key_values(const std::string& text);
/// JSON if the text starts with '{', key=value otherwise.
nlohmann::json parse_config_text(const std::string& text);
std::string emit_key_values(const RunConfig& c);

/// Hash of the canonical JSON form, output directory excluded.
std::uint64_t config_hash(const RunConfig& c);

void validate(const RunConfig& c);
DomainGrid make_grid(const RunConfig& c);
KernelSpec make_kernel(const RunConfig& c, const DomainGrid& grid);
/// Same family with a different gamma.
KernelSpec make_kernel(const RunConfig& c, const DomainGrid& grid, double gamma);

/// Applies flag values on top of a config document. A flag whose key the
/// document already sets to a different value is a conflict.
nlohmann::json merge_flags(const nlohmann::json& file_doc,
                           const std::map<std::string, std::string>& flags);

}  // namespace gmc::cli

#endif  // GMC_CLI_CONFIG_HPP
