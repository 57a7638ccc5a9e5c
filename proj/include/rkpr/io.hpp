#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkpr {

// All floating-point output goes through this so that reports are
// byte-identical for identical inputs.
inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

/// Minimal JSON value with insertion-ordered object keys and %.17g floats.
/// nlohmann/json would reorder keys and shortest-round-trip doubles; the
/// report contract wants stable key order and .17g, so we write it directly.
class Json {
 public:
  static Json object() { return Json(Kind::Object); }
  static Json array() { return Json(Kind::Array); }

  static Json null() { Json j(Kind::Null); return j; }

  static Json of(double v) { Json j(Kind::Number); j.scalar_ = fmt_g17(v); return j; }
  static Json of(std::int64_t v) { Json j(Kind::Number); j.scalar_ = std::to_string(v); return j; }
  static Json of(std::uint64_t v) { Json j(Kind::Number); j.scalar_ = std::to_string(v); return j; }
  static Json of(int v) { return of(static_cast<std::int64_t>(v)); }
  static Json of(bool v) { Json j(Kind::Bool); j.scalar_ = v ? "true" : "false"; return j; }
  static Json of(const std::string& v) { Json j(Kind::String); j.scalar_ = v; return j; }
  static Json of(const char* v) { return of(std::string(v)); }

  template <class T>
  Json& put(const std::string& key, T&& value) {
    return put_json(key, wrap(std::forward<T>(value)));
  }
  Json& put_json(const std::string& key, Json value) {
    if (kind_ != Kind::Object) throw std::logic_error("Json::put on non-object");
    keys_.push_back(key);
    children_.push_back(std::make_shared<Json>(std::move(value)));
    return *this;
  }

  template <class T>
  Json& push(T&& value) {
    return push_json(wrap(std::forward<T>(value)));
  }
  Json& push_json(Json value) {
    if (kind_ != Kind::Array) throw std::logic_error("Json::push on non-array");
    children_.push_back(std::make_shared<Json>(std::move(value)));
    return *this;
  }

  std::string dump(int indent = 2) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
  }

 private:
  enum class Kind { Object, Array, Number, Bool, String, Null };

  explicit Json(Kind k) : kind_(k) {}

  template <class T>
  static Json wrap(T&& value) {
    if constexpr (std::is_same_v<std::decay_t<T>, Json>) {
      return std::forward<T>(value);
    } else {
      return of(std::forward<T>(value));
    }
  }

  void write(std::string& out, int indent, int depth) const {
    const std::string pad(static_cast<size_t>(indent) * (depth + 1), ' ');
    const std::string closepad(static_cast<size_t>(indent) * depth, ' ');
    switch (kind_) {
      case Kind::Number:
      case Kind::Bool:
        out += scalar_;
        break;
      case Kind::Null:
        out += "null";
        break;
      case Kind::String:
        out += '"';
        out += json_escape(scalar_);
        out += '"';
        break;
      case Kind::Object: {
        if (children_.empty()) { out += "{}"; break; }
        out += "{\n";
        for (size_t i = 0; i < children_.size(); ++i) {
          out += pad;
          out += '"';
          out += json_escape(keys_[i]);
          out += "\": ";
          children_[i]->write(out, indent, depth + 1);
          if (i + 1 < children_.size()) out += ',';
          out += '\n';
        }
        out += closepad;
        out += '}';
        break;
      }
      case Kind::Array: {
        if (children_.empty()) { out += "[]"; break; }
        out += "[\n";
        for (size_t i = 0; i < children_.size(); ++i) {
          out += pad;
          children_[i]->write(out, indent, depth + 1);
          if (i + 1 < children_.size()) out += ',';
          out += '\n';
        }
        out += closepad;
        out += ']';
        break;
      }
    }
  }

  Kind kind_;
  std::string scalar_;
  std::vector<std::string> keys_;
  std::vector<std::shared_ptr<Json>> children_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return content;
}

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Flat `key = value` config files; '#' starts a comment.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad config line: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("bad config line: " + line);
    kv[key] = value;
  }
  return kv;
}

}  // namespace rkpr
