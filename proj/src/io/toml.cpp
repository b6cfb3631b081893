#include "splatfuse/io/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "splatfuse/core/error.hpp"

namespace splatfuse {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool is_bare_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      return false;
  }
  return true;
}

// Strip a trailing comment, honoring '#' inside quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  bool escaped = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (escaped) {
      escaped = false;
    } else if (in_string && c == '\\') {
      escaped = true;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string parse_string_literal(const std::string& raw,
                                 const std::string& where) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
    throw ConfigError(where + ": unterminated string");
  std::string out;
  bool escaped = false;
  for (size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (escaped) {
      switch (c) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw ConfigError(where + ": unsupported escape \\" +
                            std::string(1, c));
      }
      escaped = false;
    } else if (c == '\\') {
      escaped = true;
    } else if (c == '"') {
      throw ConfigError(where + ": stray quote inside string");
    } else {
      out += c;
    }
  }
  if (escaped) throw ConfigError(where + ": dangling escape");
  return out;
}

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text, const std::string& origin) {
  TomlDoc doc;
  std::istringstream in(text);
  std::string raw_line;
  std::string current_table;
  doc.tables_[current_table];  // root table always exists
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string where = origin + ":" + std::to_string(line_no);
    std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": malformed table header");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (!is_bare_key(name))
        throw ConfigError(where + ": invalid table name '" + name + "'");
      if (doc.tables_.count(name))
        throw ConfigError(where + ": duplicate table [" + name + "]");
      doc.tables_[name];
      current_table = name;
      continue;
    }

    size_t eq = std::string::npos;
    {
      bool in_string = false;
      for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '=' && !in_string) {
          eq = i;
          break;
        }
      }
    }
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!is_bare_key(key))
      throw ConfigError(where + ": invalid key '" + key + "'");
    if (val.empty()) throw ConfigError(where + ": missing value for " + key);

    auto& table = doc.tables_[current_table];
    if (table.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "'");

    Value v;
    if (val == "true" || val == "false") {
      v.kind = Value::Kind::kBool;
      v.b = (val == "true");
    } else if (val.front() == '"') {
      v.kind = Value::Kind::kString;
      v.s = parse_string_literal(val, where);
    } else {
      bool looks_float = val.find_first_of(".eE") != std::string::npos ||
                         val == "inf" || val == "-inf" || val == "nan";
      const char* begin = val.c_str();
      char* end = nullptr;
      if (looks_float) {
        v.kind = Value::Kind::kFloat;
        v.f = std::strtod(begin, &end);
      } else {
        v.kind = Value::Kind::kInt;
        v.i = std::strtoll(begin, &end, 10);
        v.f = static_cast<double>(v.i);
      }
      if (end != begin + val.size())
        throw ConfigError(where + ": cannot parse value '" + val + "'");
    }
    table.emplace(key, std::move(v));
  }
  return doc;
}

TomlDoc TomlDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const TomlDoc::Value* TomlDoc::find(const std::string& table,
                                    const std::string& key) const {
  auto t = tables_.find(table);
  if (t == tables_.end()) return nullptr;
  auto k = t->second.find(key);
  if (k == t->second.end()) return nullptr;
  return &k->second;
}

bool TomlDoc::has_table(const std::string& table) const {
  return tables_.count(table) > 0;
}

bool TomlDoc::has(const std::string& table, const std::string& key) const {
  return find(table, key) != nullptr;
}

double TomlDoc::get_double(const std::string& table, const std::string& key,
                           double fallback) const {
  const Value* v = find(table, key);
  if (!v) return fallback;
  if (v->kind == Value::Kind::kFloat || v->kind == Value::Kind::kInt)
    return v->f;
  throw ConfigError("config value " + table + "." + key + " must be a number");
}

long long TomlDoc::get_int(const std::string& table, const std::string& key,
                           long long fallback) const {
  const Value* v = find(table, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::kInt)
    throw ConfigError("config value " + table + "." + key +
                      " must be an integer");
  return v->i;
}

bool TomlDoc::get_bool(const std::string& table, const std::string& key,
                       bool fallback) const {
  const Value* v = find(table, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::kBool)
    throw ConfigError("config value " + table + "." + key +
                      " must be a boolean");
  return v->b;
}

std::string TomlDoc::get_string(const std::string& table,
                                const std::string& key,
                                const std::string& fallback) const {
  const Value* v = find(table, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::kString)
    throw ConfigError("config value " + table + "." + key +
                      " must be a string");
  return v->s;
}

std::vector<std::string> TomlDoc::tables() const {
  std::vector<std::string> out;
  for (const auto& [name, table] : tables_) out.push_back(name);
  return out;
}

std::vector<std::string> TomlDoc::keys(const std::string& table) const {
  std::vector<std::string> out;
  auto t = tables_.find(table);
  if (t == tables_.end()) return out;
  for (const auto& [key, value] : t->second) out.push_back(key);
  return out;
}

}  // namespace splatfuse
