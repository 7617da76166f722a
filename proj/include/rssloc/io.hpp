#pragma once

// Plain-text file formats: network and measurement tables, belief snapshots,
// key-value spec documents and the common output header.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rssloc/belief.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Raised when an input file cannot be opened.
class MissingFileError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed number '" + s + "' for " + what);
  }
}

inline long long parse_int(const std::string& s, const std::string& what)
{
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("malformed integer '" + s + "' for " + what);
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what)
{
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("malformed unsigned integer '" + s + "' for " + what);
  return v;
}

/// Shortest text that reads back to the same double.
inline std::string fmt_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw MissingFileError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Data lines of a table file: comments (#) and blanks dropped, header checked.
inline std::vector<std::vector<std::string>> read_table(const std::string& text,
                                                        std::string_view expected_header,
                                                        const std::string& what)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    if (!header_seen) {
      if (t.rfind(expected_header, 0) != 0)
        throw ConfigError(what + ": expected header '" + std::string(expected_header) +
                          "' at line " + std::to_string(lineno));
      header_seen = true;
      continue;
    }
    rows.push_back(split(t, ','));
  }
  if (!header_seen)
    throw ConfigError(what + ": missing header line");
  return rows;
}

/// `id,role,x,y` records; comm_range is supplied separately.
inline NetworkGeometry parse_network(const std::string& text, double comm_range)
{
  std::vector<Node> nodes;
  for (const auto& f : read_table(text, "id,role,x,y", "network file")) {
    if (f.size() != 4)
      throw ConfigError("network file: expected 4 fields, got " + std::to_string(f.size()));
    Node n;
    n.id = static_cast<NodeId>(parse_int(f[0], "node id"));
    if (f[1] == "agent")
      n.role = NodeRole::agent;
    else if (f[1] == "anchor")
      n.role = NodeRole::anchor;
    else
      throw ConfigError("network file: unknown role '" + f[1] + "'");
    n.position = {parse_double(f[2], "x"), parse_double(f[3], "y")};
    nodes.push_back(n);
  }
  return NetworkGeometry(std::move(nodes), comm_range);
}

inline void write_network(std::ostream& os, const NetworkGeometry& g)
{
  os << "id,role,x,y\n";
  for (const auto& n : g.nodes())
    os << n.id << ',' << to_string(n.role) << ',' << fmt_double(n.position.x) << ','
       << fmt_double(n.position.y) << '\n';
}

/// `i,j,r_dbm[,sigma]` records; a missing sigma takes default_sigma.
inline MeasurementSet parse_measurements(const std::string& text, double default_sigma)
{
  MeasurementSet ms;
  for (const auto& f : read_table(text, "i,j,r_dbm", "measurement file")) {
    if (f.size() != 3 && f.size() != 4)
      throw ConfigError("measurement file: expected 3 or 4 fields");
    Measurement m;
    m.i = static_cast<NodeId>(parse_int(f[0], "i"));
    m.j = static_cast<NodeId>(parse_int(f[1], "j"));
    if (m.i > m.j)
      std::swap(m.i, m.j);
    m.rss_dbm = parse_double(f[2], "r_dbm");
    m.sigma = f.size() == 4 ? parse_double(f[3], "sigma") : default_sigma;
    ms.edges.push_back(m);
  }
  return ms;
}

inline void write_measurements(std::ostream& os, const MeasurementSet& ms)
{
  os << "i,j,r_dbm,sigma\n";
  for (const auto& m : ms.edges)
    os << m.i << ',' << m.j << ',' << fmt_double(m.rss_dbm) << ',' << fmt_double(m.sigma) << '\n';
}

inline void write_belief_header(std::ostream& os) { os << "iter,node_id,sample_index,x,y\n"; }

inline void write_belief_rows(std::ostream& os, int iter, const ParticleBelief& b)
{
  for (std::size_t l = 0; l < b.samples.size(); ++l)
    os << iter << ',' << b.owner << ',' << l << ',' << fmt_double(b.samples[l].x) << ','
       << fmt_double(b.samples[l].y) << '\n';
}

inline void write_alpha_header(std::ostream& os) { os << "iter,grid_index,alpha,mass\n"; }

inline void write_alpha_rows(std::ostream& os, int iter, const AlphaGridBelief& b)
{
  for (std::size_t r = 0; r < b.size(); ++r)
    os << iter << ',' << r << ',' << fmt_double(b.grid[r]) << ',' << fmt_double(b.masses[r])
       << '\n';
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Ordered key-value document: `key = value` lines, `#` starts a comment.
class KeyValues
{
public:
  static KeyValues parse(const std::string& text)
  {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      const auto t = trim(line);
      if (t.empty())
        continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("spec line " + std::to_string(lineno) + ": expected key = value");
      const auto key = trim(t.substr(0, eq));
      if (key.empty())
        throw ConfigError("spec line " + std::to_string(lineno) + ": empty key");
      kv.set(key, trim(t.substr(eq + 1)));
    }
    return kv;
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get(const std::string& key, const std::string& fallback) const
  {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  /// Canonical `key = value` text, sorted by key.
  std::string canonical() const
  {
    std::string out;
    for (const auto& [k, v] : values_)
      out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const { return hex64(fnv1a(canonical())); }

private:
  std::map<std::string, std::string> values_;
};

/// First line of every output file.
inline std::string output_header(const std::string& config_hash, std::uint64_t seed)
{
  return std::string("# rssloc ") + kToolVersion + " config_hash=" + config_hash +
         " seed=" + std::to_string(seed) + "\n";
}

}  // namespace rssloc
