#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace muonpp::cli {

/// Bad command line or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { integer, count, seed, real, text, boolean, int_list, real_list, dims_list, path };

enum class Presence { required, defaulted, optional };

struct KeySpec {
  std::string key;
  ValueType type = ValueType::text;
  Presence presence = Presence::defaulted;
  std::string default_value;
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string summary;
  std::vector<KeySpec> keys;
};

const std::vector<CommandSpec>& commands();
const CommandSpec* find_command(const std::string& name);

struct RunConfig {
  std::string command;
  /// Fully resolved values (file, then flags, then defaults), as text.
  std::map<std::string, std::string> values;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  std::optional<std::filesystem::path> config_file;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  const std::string& text(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<std::int64_t> int_list(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;
  std::vector<std::pair<std::int64_t, std::int64_t>> dims_list(const std::string& key) const;
};

/// Flat `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// `args` excludes the program name: `<command> [--key value]...`. A
/// `--config <file>` flag (or `file`) supplies defaults that flags override.
RunConfig parse_config(const std::vector<std::string>& args,
                       const std::optional<std::filesystem::path>& file = std::nullopt);

std::string usage();
std::string usage(const CommandSpec& command);

/// Runs the command; 0 on success or pass, 1 on a fail or inconclusive
/// verdict. Throws UsageError for invalid input.
int dispatch(const RunConfig& config, std::ostream& out);

/// parse_config + dispatch with the exit-code contract applied to errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace muonpp::cli
