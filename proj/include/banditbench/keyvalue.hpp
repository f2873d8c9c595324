#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace banditbench {

/// `key = value` text format shared by dataset schemas and experiment
/// configs. `#` starts a comment; blank lines are ignored; later keys win.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::filesystem::path& path);

  std::optional<std::string> get(std::string_view key) const;
  bool contains(std::string_view key) const { return get(key).has_value(); }
  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

std::string trim(std::string_view text);
/// Splits on `sep`, trimming each piece; empty input gives an empty list.
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace banditbench
