#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfluct {

// Bad user input. The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ValueKind { real, integer, text };

struct KeySpec {
  const char* key;
  const char* fallback;  // "" means no default (required or subcommand-derived)
  ValueKind kind;
  const char* help;
};

// Every recognised key. Anything else in a config is an error.
inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema{
      {"K", "", ValueKind::real, "coupling strength, > 0"},
      {"omega0", "", ValueKind::real, "disorder amplitude, >= 0"},
      {"M", "256", ValueKind::integer, "grid nodes, even, >= 4n+2"},
      {"n", "32", ValueKind::integer, "Fourier truncation order"},
      {"dt", "0.05", ValueKind::real, "time step"},
      {"T", "", ValueKind::real, "horizon (subcommand default)"},
      {"t1", "", ValueKind::real, "fit window start (default T/5)"},
      {"seed", "0", ValueKind::integer, "master seed"},
      {"runs", "1", ValueKind::integer, "independent particle runs"},
      {"workers", "0", ValueKind::integer, "worker threads, 0 = all cores"},
      {"N", "400", ValueKind::integer, "number of rotators"},
      {"disorder", "iid", ValueKind::text, "iid | symmetrized"},
      {"init", "uniform", ValueKind::text, "uniform | stationary"},
      {"eps", "0.040824829046386304", ValueKind::real, "first-mode perturbation of the uniform PDE start"},
      {"record_every", "1", ValueKind::integer, "steps between recorded samples"},
      {"threshold", "1e-4", ValueKind::real, "zero-cluster radius"},
      {"z", "0.5", ValueKind::real, "disorder asymmetry for a single SPDE run"},
      {"paths", "1", ValueKind::integer, "noise paths per disorder draw"},
      {"draws", "100", ValueKind::integer, "disorder draws"},
      {"draw_mode", "gaussian", ValueKind::text, "gaussian | zero"},
      {"method", "ell_dq_slope", ValueKind::text, "ell_dq_slope | eta_sin_slope"},
      {"scaleX", "0", ValueKind::real, "amplitude of the zero-mass initial surrogate"},
  };
  return schema;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& k : config_schema())
    if (key == k.key) return &k;
  return nullptr;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class RunConfig {
 public:
  // Set one key. Origin is used in error messages ("file.cfg:3", "--set").
  void set(const std::string& key, const std::string& value, const std::string& origin, bool allow_override) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError(origin + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(origin + ": key '" + key + "' has an empty value");
    check_kind(*spec, value, origin);
    auto [it, fresh] = explicit_.try_emplace(key, value);
    if (!fresh) {
      if (!allow_override || overridden_.count(key))
        throw ConfigError(origin + ": duplicate key '" + key + "'");
      it->second = value;
      overridden_.insert(key);
    } else if (allow_override) {
      overridden_.insert(key);
    }
  }

  bool has(const std::string& key) const { return explicit_.count(key) || *require(key).fallback; }

  std::string text(const std::string& key) const {
    if (auto it = explicit_.find(key); it != explicit_.end()) return it->second;
    const KeySpec& s = require(key);
    if (!*s.fallback) throw ConfigError(key + ": required but not set");
    return s.fallback;
  }
  double real(const std::string& key) const { return std::stod(text(key)); }
  double real_or(const std::string& key, double v) const { return has(key) ? real(key) : v; }
  long long integer(const std::string& key) const { return std::stoll(text(key)); }

  // Effective key=value lines, sorted: the canonical form hashed into file names.
  std::map<std::string, std::string> effective() const {
    std::map<std::string, std::string> out;
    for (const KeySpec& s : config_schema())
      if (explicit_.count(s.key) || *s.fallback) out[s.key] = text(s.key);
    return out;
  }

  std::string canonical() const {
    std::string c;
    for (const auto& [k, v] : effective()) c += k + "=" + v + "\n";
    return c;
  }

 private:
  static const KeySpec& require(const std::string& key) {
    const KeySpec* s = find_key(key);
    if (!s) throw std::logic_error("config key not in schema: " + key);
    return *s;
  }

  static void check_kind(const KeySpec& s, const std::string& v, const std::string& origin) {
    std::size_t used = 0;
    try {
      if (s.kind == ValueKind::real) (void)std::stod(v, &used);
      if (s.kind == ValueKind::integer) (void)std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.kind != ValueKind::text && used != v.size())
      throw ConfigError(origin + ": " + s.key + ": '" + v + "' is not a valid " +
                        (s.kind == ValueKind::real ? "number" : "integer"));
  }

  std::map<std::string, std::string> explicit_;
  std::set<std::string> overridden_;
};

// key = value lines; '#' starts a comment.
inline void parse_config_text(RunConfig& cfg, const std::string& textv, const std::string& name) {
  std::istringstream in(textv);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string origin = name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(origin + ": expected 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin, false);
  }
}

inline void parse_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  parse_config_text(cfg, ss.str(), path);
}

// "key=value" from the command line; overrides the file.
inline void apply_override(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--set: expected key=value, got '" + kv + "'");
  cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), "--set", true);
}

// Range checks shared by every subcommand; failures name the key.
inline void validate_common(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
  if (!(c.real("K") > 0.0)) fail("K", "must be > 0");
  if (!(c.real("omega0") >= 0.0)) fail("omega0", "must be >= 0");
  const long long M = c.integer("M"), n = c.integer("n");
  if (n < 1) fail("n", "must be >= 1");
  if (M % 2 != 0 || M < 4 * n + 2) fail("M", "must be even and >= 4n+2");
  if (!(c.real("dt") > 0.0)) fail("dt", "must be > 0");
  if (c.has("T") && !(c.real("T") > 0.0)) fail("T", "must be > 0");
  if (c.integer("seed") < 0) fail("seed", "must be >= 0");
  if (c.integer("runs") < 1) fail("runs", "must be >= 1");
  if (c.integer("workers") < 0) fail("workers", "must be >= 0");
  if (c.integer("N") < 1) fail("N", "must be >= 1");
  if (c.integer("record_every") < 1) fail("record_every", "must be >= 1");
  if (c.integer("paths") < 1) fail("paths", "must be >= 1");
  if (c.integer("draws") < 2) fail("draws", "must be >= 2");
  if (!(c.real("threshold") > 0.0)) fail("threshold", "must be > 0");
  if (!(c.real("eps") >= 0.0 && c.real("eps") < 0.5)) fail("eps", "must lie in [0, 0.5)");
  if (!(c.real("scaleX") >= 0.0)) fail("scaleX", "must be >= 0");
  const std::string d = c.text("disorder"), i = c.text("init"), m = c.text("method"), dm = c.text("draw_mode");
  if (d != "iid" && d != "symmetrized") fail("disorder", "must be iid or symmetrized");
  if (i != "uniform" && i != "stationary") fail("init", "must be uniform or stationary");
  if (m != "ell_dq_slope" && m != "eta_sin_slope") fail("method", "must be ell_dq_slope or eta_sin_slope");
  if (dm != "gaussian" && dm != "zero") fail("draw_mode", "must be gaussian or zero");
  if (d == "symmetrized" && c.integer("N") % 2 != 0) fail("N", "must be even for symmetrized disorder");
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace kfluct
