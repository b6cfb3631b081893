#pragma once

#include <map>
#include <string>
#include <vector>

namespace splatfuse {

// Minimal TOML subset: `[table]` headers, `key = value` pairs with bool,
// integer, float or double-quoted string values, and `#` comments. That is
// all the config surface needs. Syntax or type errors raise ConfigError.
class TomlDoc {
 public:
  static TomlDoc parse(const std::string& text,
                       const std::string& origin = "<string>");
  static TomlDoc parse_file(const std::string& path);

  bool has_table(const std::string& table) const;
  bool has(const std::string& table, const std::string& key) const;

  // get_double accepts integer literals as well; the others are strict.
  double get_double(const std::string& table, const std::string& key,
                    double fallback) const;
  long long get_int(const std::string& table, const std::string& key,
                    long long fallback) const;
  bool get_bool(const std::string& table, const std::string& key,
                bool fallback) const;
  std::string get_string(const std::string& table, const std::string& key,
                         const std::string& fallback) const;

  std::vector<std::string> tables() const;
  std::vector<std::string> keys(const std::string& table) const;

 private:
  struct Value {
    enum class Kind { kBool, kInt, kFloat, kString };
    Kind kind = Kind::kInt;
    bool b = false;
    long long i = 0;
    double f = 0.0;
    std::string s;
  };

  const Value* find(const std::string& table, const std::string& key) const;

  std::map<std::string, std::map<std::string, Value>> tables_;
};

}  // namespace splatfuse
