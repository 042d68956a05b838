#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bcw/nonlinear.hpp"

namespace bcw {
namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct RawEntry {
  std::string value;
  int line = 0;
};

inline double parse_number(const std::string& text, const std::string& key, int line) {
  const std::string t = trim(text);
  double out = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || t.empty())
    throw ConfigError("line " + std::to_string(line) + ": malformed number '" + t +
                      "' for key '" + key + "'");
  return out;
}

inline long parse_integer(const std::string& text, const std::string& key, int line) {
  const std::string t = trim(text);
  long out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("line " + std::to_string(line) + ": malformed integer '" + t +
                      "' for key '" + key + "'");
  return out;
}

inline bool parse_bool(const std::string& text, const std::string& key, int line) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ConfigError("line " + std::to_string(line) + ": expected true/false for key '" +
                    key + "', got '" + t + "'");
}

inline std::vector<std::string> split_array(const std::string& text, const std::string& key,
                                            int line) {
  const std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects an array like [1.0, 2.0]");
  std::vector<std::string> parts;
  std::string body = t.substr(1, t.size() - 2);
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(',', start);
    std::string piece =
        trim(comma == std::string::npos ? body.substr(start) : body.substr(start, comma - start));
    if (!piece.empty()) parts.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

}  // namespace detail

/// Parses the flat key=value configuration format. '#' starts a comment,
/// keys are dotted (medium.b = 2.0), array values use [a, b, c]. Unknown
/// and duplicate keys are hard errors; every diagnostic names the key and
/// the line it came from.
inline SimConfig parse_config(const std::string& text) {
  using detail::RawEntry;
  static const char* known[] = {
      "domain.lengths", "domain.modes_per_dim", "medium.a",      "medium.b",
      "medium.c",       "medium.sigma",         "medium.nu",     "medium.prandtl",
      "medium.b_over_a", "time.dt",             "time.t_end",    "nonlinear.enabled",
      "picard.tol",     "picard.max_iter",      "dealias",       "init.psi0",
      "init.psi1",      "init.psi2",            "output.dir",    "output.stride"};

  std::map<std::string, RawEntry> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" +
                        stripped + "'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    bool recognised = false;
    for (const char* k : known)
      if (key == k) {
        recognised = true;
        break;
      }
    if (!recognised)
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (raw.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(raw[key].line) + ")");
    raw[key] = RawEntry{value, lineno};
  }

  auto take = [&](const char* key) -> std::optional<RawEntry> {
    auto it = raw.find(key);
    if (it == raw.end()) return std::nullopt;
    RawEntry e = it->second;
    raw.erase(it);
    return e;
  };
  auto require = [&](const char* key) -> RawEntry {
    auto e = take(key);
    if (!e) throw ConfigError("missing required key '" + std::string(key) + "'");
    return *e;
  };

  SimConfig cfg;

  {
    const RawEntry lengths_e = require("domain.lengths");
    const RawEntry modes_e = require("domain.modes_per_dim");
    const auto lparts = detail::split_array(lengths_e.value, "domain.lengths", lengths_e.line);
    const auto mparts =
        detail::split_array(modes_e.value, "domain.modes_per_dim", modes_e.line);
    if (lparts.empty() || lparts.size() > 3)
      throw ConfigError("domain.lengths must have 1 to 3 entries");
    if (mparts.size() != lparts.size())
      throw ConfigError("domain.modes_per_dim must match domain.lengths in length");
    std::vector<double> L;
    std::vector<int> N;
    for (std::size_t i = 0; i < lparts.size(); ++i) {
      L.push_back(detail::parse_number(lparts[i], "domain.lengths", lengths_e.line));
      const long n = detail::parse_integer(mparts[i], "domain.modes_per_dim", modes_e.line);
      if (n < 1 || n > 100000)
        throw ConfigError("domain.modes_per_dim entries must be in [1, 100000]");
      N.push_back(static_cast<int>(n));
    }
    cfg.domain = BoxDomain::make(L, N);
  }

  const auto a_e = take("medium.a");
  const auto b_e = take("medium.b");
  const auto c_e = take("medium.c");
  const auto sigma_e = take("medium.sigma");
  const auto nu_e = take("medium.nu");
  const auto pr_e = take("medium.prandtl");
  const auto boa_e = take("medium.b_over_a");

  double c = c_e ? detail::parse_number(c_e->value, "medium.c", c_e->line) : 1.0;
  if (!(c > 0.0)) throw ConfigError("medium.c must be positive");

  double b = b_e ? detail::parse_number(b_e->value, "medium.b", b_e->line) : 1.0;
  if (!(b > 0.0))
    throw ConfigError(
        "medium.b must be strictly positive: the strong-damping assumption b > 0 "
        "underlies every decay statement this tool checks");

  std::optional<double> a;
  if (a_e) {
    a = detail::parse_number(a_e->value, "medium.a", a_e->line);
    if (!(*a > 0.0)) throw ConfigError("medium.a must be positive");
  }
  if (nu_e || pr_e) {
    if (!(nu_e && pr_e))
      throw ConfigError("medium.nu and medium.prandtl must be given together");
    const double nu = detail::parse_number(nu_e->value, "medium.nu", nu_e->line);
    const double pr = detail::parse_number(pr_e->value, "medium.prandtl", pr_e->line);
    if (!(nu > 0.0) || !(pr > 0.0))
      throw ConfigError("medium.nu and medium.prandtl must be positive");
    const double derived = a_from_provenance(nu, pr);
    if (a) {
      if (std::abs(*a - derived) > 1e-12 * std::max(std::abs(*a), derived))
        throw ConfigError(
            "medium.a conflicts with medium.nu / medium.prandtl: explicit value " +
            std::to_string(*a) + " vs derived " + std::to_string(derived));
    } else {
      a = derived;
    }
  }
  if (!a) a = 1.0;

  std::optional<double> sigma;
  if (sigma_e) {
    sigma = detail::parse_number(sigma_e->value, "medium.sigma", sigma_e->line);
    if (*sigma < 0.0) throw ConfigError("medium.sigma must be nonnegative");
  }
  if (boa_e) {
    const double ratio = detail::parse_number(boa_e->value, "medium.b_over_a", boa_e->line);
    if (ratio < 0.0) throw ConfigError("medium.b_over_a must be nonnegative");
    const double derived = sigma_from_provenance(ratio, c);
    if (sigma) {
      if (std::abs(*sigma - derived) > 1e-12 * std::max(std::abs(*sigma), derived))
        throw ConfigError(
            "medium.sigma conflicts with medium.b_over_a: explicit value " +
            std::to_string(*sigma) + " vs derived " + std::to_string(derived));
    } else {
      sigma = derived;
    }
  }
  if (!sigma) sigma = 0.0;

  cfg.medium = make_medium(*a, b, c, *sigma);
  if (nu_e) {
    cfg.nu = detail::parse_number(nu_e->value, "medium.nu", nu_e->line);
    cfg.prandtl = detail::parse_number(pr_e->value, "medium.prandtl", pr_e->line);
  }
  if (boa_e) cfg.b_over_a = detail::parse_number(boa_e->value, "medium.b_over_a", boa_e->line);

  if (const auto e = take("time.dt")) {
    cfg.dt = detail::parse_number(e->value, "time.dt", e->line);
    if (!(cfg.dt > 0.0)) throw ConfigError("time.dt must be positive");
  }
  {
    const RawEntry e = require("time.t_end");
    cfg.t_end = detail::parse_number(e.value, "time.t_end", e.line);
    if (!(cfg.t_end > 0.0)) throw ConfigError("time.t_end must be positive");
  }
  if (const auto e = take("nonlinear.enabled"))
    cfg.nonlinear_enabled = detail::parse_bool(e->value, "nonlinear.enabled", e->line);
  if (const auto e = take("picard.tol")) {
    cfg.picard_tol = detail::parse_number(e->value, "picard.tol", e->line);
    if (!(cfg.picard_tol > 0.0)) throw ConfigError("picard.tol must be positive");
  }
  if (const auto e = take("picard.max_iter")) {
    const long n = detail::parse_integer(e->value, "picard.max_iter", e->line);
    if (n < 1) throw ConfigError("picard.max_iter must be at least 1");
    cfg.picard_max_iter = static_cast<int>(n);
  }
  if (const auto e = take("dealias"))
    cfg.dealias = detail::parse_bool(e->value, "dealias", e->line);

  auto read_amplitudes = [&](const char* key, std::vector<double>& dst) {
    if (const auto e = take(key)) {
      const auto parts = detail::split_array(e->value, key, e->line);
      dst.clear();
      for (const auto& piece : parts) dst.push_back(detail::parse_number(piece, key, e->line));
      const std::size_t n_modes = cfg.domain.mode_count();
      if (dst.size() > n_modes)
        throw ConfigError(std::string("key '") + key + "' lists " +
                          std::to_string(dst.size()) + " amplitudes but the domain has only " +
                          std::to_string(n_modes) + " modes");
    }
  };
  read_amplitudes("init.psi0", cfg.psi0_amplitudes);
  read_amplitudes("init.psi1", cfg.psi1_amplitudes);
  read_amplitudes("init.psi2", cfg.psi2_amplitudes);

  if (const auto e = take("output.dir")) {
    if (e->value.empty()) throw ConfigError("output.dir must not be empty");
    cfg.output_dir = e->value;
  }
  if (const auto e = take("output.stride")) {
    const long n = detail::parse_integer(e->value, "output.stride", e->line);
    if (n < 1) throw ConfigError("output.stride must be at least 1");
    cfg.stride = static_cast<int>(n);
  }

  return cfg;
}

}  // namespace bcw
