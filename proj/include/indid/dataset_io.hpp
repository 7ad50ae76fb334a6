#pragma once

// On-disk dataset split format:
//   data.csv          seq_id,t,x0,...,x{D-1}   rows sorted by (seq_id, t)
//   labels.csv        seq_id,theta             theta is an integer or `inf`
//   labels_multi.csv  seq_id,theta_list        semicolon-separated (multi-change data only)
//   meta.json         generator spec and seed
//
// Doubles are written in shortest round-trip form, so write/read is bit-exact.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "indid/core_types.hpp"
#include "indid/error.hpp"

namespace indid::io {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::size_t parse_index(std::string_view s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("cannot parse index '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

namespace detail {

inline std::vector<std::size_t> id_order(const Dataset& ds) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ds.sequences[a].id < ds.sequences[b].id; });
  return order;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot open '" + p.string() + "' for writing");
  return out;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open '" + p.string() + "'");
  return in;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

inline void write_split(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  const auto order = detail::id_order(ds);
  const std::size_t dim = ds.dim();

  {
    auto out = detail::open_out(dir / "data.csv");
    out << "seq_id,t";
    for (std::size_t d = 0; d < dim; ++d) out << ",x" << d;
    out << '\n';
    for (std::size_t i : order) {
      const auto& s = ds.sequences[i];
      for (std::size_t t = 0; t < s.length(); ++t) {
        out << s.id << ',' << t;
        for (double v : s.observations.row(t)) out << ',' << format_double(v);
        out << '\n';
      }
    }
  }
  {
    auto out = detail::open_out(dir / "labels.csv");
    out << "seq_id,theta\n";
    for (std::size_t i : order) {
      const auto& s = ds.sequences[i];
      out << s.id << ',' << (s.label.has_change() ? std::to_string(s.label.theta()) : std::string("inf")) << '\n';
    }
  }
  if (ds.multi_labels) {
    auto out = detail::open_out(dir / "labels_multi.csv");
    out << "seq_id,theta_list\n";
    for (std::size_t i : order) {
      out << ds.sequences[i].id << ',';
      const auto& pts = (*ds.multi_labels)[i].points();
      for (std::size_t k = 0; k < pts.size(); ++k) out << (k ? ";" : "") << pts[k];
      out << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "meta.json");
    out << ds.metadata.dump(2) << '\n';
  }
}

inline Dataset read_split(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory '" + dir.string() + "' does not exist");

  Dataset ds;
  std::map<std::string, std::size_t> index;
  std::string line;

  {
    auto in = detail::open_in(dir / "data.csv");
    if (!std::getline(in, line)) throw DataError("data.csv is empty");
    detail::strip_cr(line);
    auto header = split(line, ',');
    if (header.size() < 3 || header[0] != "seq_id" || header[1] != "t")
      throw DataError("data.csv: bad header");
    const std::size_t dim = header.size() - 2;

    std::vector<std::vector<double>> rows_of;  // per sequence, flattened
    std::vector<std::size_t> lengths;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != dim + 2) throw DataError("data.csv:" + std::to_string(lineno) + ": wrong field count");
      std::string id(fields[0]);
      auto [it, inserted] = index.try_emplace(id, ds.sequences.size());
      if (inserted) {
        ds.sequences.push_back(LabeledSequence{id, {}, ChangeLabel::no_change()});
        rows_of.emplace_back();
        lengths.push_back(0);
      }
      const std::size_t k = it->second;
      if (parse_index(fields[1]) != lengths[k])
        throw DataError("data.csv:" + std::to_string(lineno) + ": time index out of order");
      for (std::size_t d = 0; d < dim; ++d) rows_of[k].push_back(parse_double(fields[d + 2]));
      ++lengths[k];
    }
    for (std::size_t k = 0; k < ds.sequences.size(); ++k)
      ds.sequences[k].observations = Matrix(lengths[k], dim, std::move(rows_of[k]));
  }
  {
    auto in = detail::open_in(dir / "labels.csv");
    if (!std::getline(in, line)) throw DataError("labels.csv is empty");
    detail::strip_cr(line);
    if (line != "seq_id,theta") throw DataError("labels.csv: bad header");
    std::vector<bool> seen(ds.size(), false);
    while (std::getline(in, line)) {
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != 2) throw DataError("labels.csv: wrong field count");
      auto it = index.find(std::string(fields[0]));
      if (it == index.end()) throw DataError("labels.csv: unknown seq_id '" + std::string(fields[0]) + "'");
      ds.sequences[it->second].label =
          fields[1] == "inf" ? ChangeLabel::no_change() : ChangeLabel::change(parse_index(fields[1]));
      seen[it->second] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw DataError("labels.csv: missing labels for some sequences");
  }
  if (fs::exists(dir / "labels_multi.csv")) {
    auto in = detail::open_in(dir / "labels_multi.csv");
    if (!std::getline(in, line)) throw DataError("labels_multi.csv is empty");
    detail::strip_cr(line);
    if (line != "seq_id,theta_list") throw DataError("labels_multi.csv: bad header");
    std::vector<MultiChangeLabel> multi(ds.size());
    while (std::getline(in, line)) {
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto comma = line.find(',');
      if (comma == std::string::npos) throw DataError("labels_multi.csv: wrong field count");
      auto it = index.find(line.substr(0, comma));
      if (it == index.end()) throw DataError("labels_multi.csv: unknown seq_id");
      std::string_view list = std::string_view(line).substr(comma + 1);
      std::vector<TimeIndex> pts;
      if (!list.empty())
        for (auto f : split(list, ';')) pts.push_back(parse_index(f));
      try {
        multi[it->second] = MultiChangeLabel(std::move(pts));
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string("labels_multi.csv: ") + e.what());
      }
    }
    ds.multi_labels = std::move(multi);
  }
  if (fs::exists(dir / "meta.json")) {
    auto in = detail::open_in(dir / "meta.json");
    try {
      ds.metadata = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("meta.json: ") + e.what());
    }
  }
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return ds;
}

}  // namespace indid::io
