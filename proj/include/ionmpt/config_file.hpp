#pragma once

#include <map>
#include <string>
#include <vector>

namespace ionmpt {

// Flat key = value configuration files: one pair per line, '#' comments,
// values may be numbers, booleans, strings or comma-separated lists.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key,
                            const std::vector<int>& fallback) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace ionmpt
