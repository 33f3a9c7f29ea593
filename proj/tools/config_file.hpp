#pragma once

// Minimal reader for the sectioned TOML subset used by run configs:
// [section] headers, key = value pairs, # comments, quoted strings.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gansearch::configfile {

struct Entry {
  std::string key;  // "section.name"
  std::string value;
  int line = 0;
};

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<Entry> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("config file not readable: " + path.string());
  std::vector<Entry> entries;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // cut comments, except inside a quoted value
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(path.string() + ":" +
                                    std::to_string(lineno) + ": bad section");
      section = strip(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty() || value.empty())
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(lineno) +
                                  ": empty key or value");
    entries.push_back({section.empty() ? key : section + "." + key,
                       std::move(value), lineno});
  }
  return entries;
}

}  // namespace gansearch::configfile
