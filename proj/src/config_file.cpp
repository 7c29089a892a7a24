#include "ionmpt/config_file.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ionmpt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

ConfigFile ConfigFile::from_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = strip_quotes(trim(line.substr(eq + 1)));
    if (key.empty())
      throw std::runtime_error("config: empty key on line " + std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string ConfigFile::get_string(const std::string& key,
                                   const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return std::stod(it->second);
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return std::stoi(it->second);
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

std::vector<double> ConfigFile::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double_list(it->second);
}

std::vector<int> ConfigFile::get_ints(const std::string& key,
                                      const std::vector<int>& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_int_list(it->second);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace ionmpt
