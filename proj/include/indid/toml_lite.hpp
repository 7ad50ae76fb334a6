#pragma once

// Minimal TOML reader for flat experiment configs: [section] headers,
// `key = value` pairs, comments, and values that are strings, booleans,
// integers, floats (including inf/nan) or single-line arrays of those.
// Nested tables, inline tables, dates and multi-line strings are rejected.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "indid/error.hpp"

namespace indid::toml {

struct Value {
  enum class Kind { Bool, Int, Float, String, Array };
  Kind kind = Kind::Int;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> array;

  bool is_number() const noexcept { return kind == Kind::Int || kind == Kind::Float; }
};

// section name ("" for the root table) -> key -> value
using Document = std::map<std::string, std::map<std::string, Value>>;

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Document parse() {
    Document doc;
    std::string section;
    doc[section];
    while (pos_ < text_.size()) {
      skip_ws();
      if (eof()) break;
      char c = text_[pos_];
      if (c == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '[') {
        ++pos_;
        skip_ws();
        section = parse_key();
        skip_ws();
        expect(']');
        if (doc.count(section) && !doc[section].empty()) fail("duplicate table [" + section + "]");
        doc[section];
        end_of_line();
        continue;
      }
      std::string key = parse_key();
      skip_ws();
      expect('=');
      skip_ws();
      Value v = parse_value();
      if (!doc[section].emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'");
      end_of_line();
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_ws() {
    while (!eof() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  void skip_comment() {
    while (!eof() && text_[pos_] != '\n') ++pos_;
  }

  void expect(char c) {
    if (eof() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void end_of_line() {
    skip_ws();
    if (!eof() && text_[pos_] == '#') skip_comment();
    if (!eof() && text_[pos_] != '\n') fail("unexpected trailing characters");
  }

  std::string parse_key() {
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                      text_[pos_] == '-'))
      ++pos_;
    if (start == pos_) fail("expected a bare key");
    return std::string(text_.substr(start, pos_ - start));
  }

  Value parse_value() {
    if (eof()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  Value parse_string() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::String;
    while (true) {
      if (eof() || text_[pos_] == '\n') fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case '"': v.s += '"'; break;
          case '\\': v.s += '\\'; break;
          case 'n': v.s += '\n'; break;
          case 't': v.s += '\t'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        v.s += c;
      }
    }
    return v;
  }

  Value parse_array() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::Array;
    while (true) {
      skip_ws();
      if (eof() || text_[pos_] == '\n') fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        break;
      }
      v.array.push_back(parse_value());
      skip_ws();
      if (!eof() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      expect(']');
      break;
    }
    return v;
  }

  Value parse_scalar() {
    std::size_t start = pos_;
    while (!eof() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '\n' && text_[pos_] != '#' &&
           text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\r')
      ++pos_;
    std::string tok(text_.substr(start, pos_ - start));
    Value v;
    if (tok == "true" || tok == "false") {
      v.kind = Value::Kind::Bool;
      v.b = tok == "true";
      return v;
    }
    std::string clean;
    for (char c : tok)
      if (c != '_') clean += c;
    std::string_view body = clean;
    bool neg = false;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      neg = body[0] == '-';
      body.remove_prefix(1);
    }
    if (body == "inf" || body == "nan") {
      v.kind = Value::Kind::Float;
      v.d = body == "inf" ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
      if (neg) v.d = -v.d;
      return v;
    }
    if (body.empty()) fail("missing value");
    const bool is_float = body.find_first_of(".eE") != std::string_view::npos;
    if (is_float) {
      double d = 0.0;
      auto r = std::from_chars(body.data(), body.data() + body.size(), d);
      if (r.ec != std::errc() || r.ptr != body.data() + body.size()) fail("invalid value '" + tok + "'");
      v.kind = Value::Kind::Float;
      v.d = neg ? -d : d;
    } else {
      std::int64_t i = 0;
      auto r = std::from_chars(body.data(), body.data() + body.size(), i);
      if (r.ec != std::errc() || r.ptr != body.data() + body.size()) fail("invalid value '" + tok + "'");
      v.kind = Value::Kind::Int;
      v.i = neg ? -i : i;
    }
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace detail

inline Document parse(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace indid::toml
