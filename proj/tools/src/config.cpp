#include "densefactor/cli.hpp"

#include "densefactor/trajectory.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace densefactor::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double x = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc{} || ptr != last || !std::isfinite(x)) {
    throw ConfigError(key, "expected a finite number, got '" + value + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& value) {
  long long x = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc{} || ptr != last) throw ConfigError(key, "expected an integer, got '" + value + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true|false, got '" + value + "'");
}

int positive_int(const std::string& key, const std::string& value) {
  const long long x = to_integer(key, value);
  if (x < 1 || x > 1'000'000'000) throw ConfigError(key, "must be a positive integer, got " + value);
  return static_cast<int>(x);
}

std::string one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (value == a) return value;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw ConfigError(key, "expected " + list + ", got '" + value + "'");
}

// "lo:hi:n" or a single value
GridSpec parse_grid(const std::string& key, const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(trim(item));
  GridSpec g;
  if (parts.size() == 1) {
    g.lo = g.hi = to_double(key, parts[0]);
    g.count = 1;
  } else if (parts.size() == 3) {
    g.lo = to_double(key, parts[0]);
    g.hi = to_double(key, parts[1]);
    g.count = positive_int(key, parts[2]);
    if (g.hi < g.lo) throw ConfigError(key, "grid upper bound below lower bound");
  } else {
    throw ConfigError(key, "expected lo:hi:count or a single value, got '" + value + "'");
  }
  return g;
}

// "p:alpha,p:alpha"
std::vector<SpeciesParam> parse_species(const std::string& key, const std::string& value) {
  std::vector<SpeciesParam> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(key, "expected p:alpha entries, got '" + item + "'");
    SpeciesParam sp;
    sp.p = static_cast<int>(to_integer(key, trim(item.substr(0, colon))));
    sp.alpha = to_double(key, trim(item.substr(colon + 1)));
    if (sp.p < 2 || sp.p > kMaxArity) throw ConfigError(key, fmt::format("arity must lie in [2, {}]", kMaxArity));
    if (sp.alpha < 0.0) throw ConfigError(key, "alpha must be >= 0");
    out.push_back(sp);
  }
  return out;
}

std::string species_string(const std::vector<SpeciesParam>& sp) {
  std::string s;
  for (const auto& x : sp) s += (s.empty() ? "" : ",") + fmt::format("{}:{}", x.p, format_number(x.alpha));
  return s;
}

std::string grid_string(const GridSpec& g) {
  return fmt::format("{}:{}:{}", format_number(g.lo), format_number(g.hi), g.count);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"command", [](auto& c, auto& k, auto& v) {
         try {
           c.command = parse_command(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"model.prior", [](auto& c, auto& k, auto& v) { c.prior = parse_prior(one_of(k, v, {"ising", "gaussian"})); }},
      {"model.channel", [](auto& c, auto& k, auto& v) { c.channel = one_of(k, v, {"additive", "sign"}); }},
      {"model.delta", [](auto& c, auto& k, auto& v) {
         c.delta = to_double(k, v);
         if (!(c.delta > 0.0)) throw ConfigError(k, "must be > 0");
       }},
      {"model.p", [](auto& c, auto& k, auto& v) {
         c.p = static_cast<int>(to_integer(k, v));
         if (c.p < 2 || c.p > kMaxArity) throw ConfigError(k, fmt::format("must lie in [2, {}]", kMaxArity));
       }},
      {"model.species", [](auto& c, auto& k, auto& v) { c.species = parse_species(k, v); }},
      {"model.alpha", [](auto& c, auto& k, auto& v) {
         c.alpha = to_double(k, v);
         if (c.alpha < 0.0) throw ConfigError(k, "must be >= 0");
       }},
      {"model.lambda", [](auto& c, auto& k, auto& v) {
         c.lambda = to_double(k, v);
         if (!(c.lambda > 0.0)) throw ConfigError(k, "must be > 0");
       }},
      {"model.N", [](auto& c, auto& k, auto& v) { c.N = positive_int(k, v); }},
      {"model.M", [](auto& c, auto& k, auto& v) { c.M = positive_int(k, v); }},
      {"model.spreading", [](auto& c, auto& k, auto& v) {
         c.spreading = one_of(k, v, {"auto", "deterministic", "rademacher", "gaussian"});
       }},
      {"algorithm.scheme", [](auto& c, auto& k, auto& v) {
         c.scheme = one_of(k, v, {"informative", "uninformative", "random", "sign-informative"});
       }},
      {"algorithm.a", [](auto& c, auto& k, auto& v) {
         c.a = to_double(k, v);
         if (!(c.a > 0.0 && c.a < 1.0)) throw ConfigError(k, "must lie in (0,1)");
       }},
      {"algorithm.damping", [](auto& c, auto& k, auto& v) {
         c.damping = to_double(k, v);
         if (c.damping > 1.0) throw ConfigError(k, "must lie in (0,1], or <= 0 for the default");
       }},
      {"algorithm.max_t", [](auto& c, auto& k, auto& v) { c.max_t = positive_int(k, v); }},
      {"algorithm.conv_tol", [](auto& c, auto& k, auto& v) {
         c.conv_tol = to_double(k, v);
         if (!(c.conv_tol > 0.0)) throw ConfigError(k, "must be > 0");
       }},
      {"algorithm.corrected", [](auto& c, auto& k, auto& v) { c.corrected = to_bool(k, v); }},
      {"algorithm.compare", [](auto& c, auto& k, auto& v) {
         c.compare_algorithm = one_of(k, v, {"gamp", "rbp"}) == "rbp" ? Algorithm::RBP : Algorithm::GAMP;
       }},
      {"se.m0", [](auto& c, auto& k, auto& v) { c.se_m0 = to_double(k, v); }},
      {"se.q0", [](auto& c, auto& k, auto& v) { c.se_q0 = to_double(k, v); }},
      {"se.Q0", [](auto& c, auto& k, auto& v) { c.se_Q0 = to_double(k, v); }},
      {"grid.alpha", [](auto& c, auto& k, auto& v) { c.alpha_grid = parse_grid(k, v); }},
      {"grid.lambda", [](auto& c, auto& k, auto& v) {
         c.lambda_grid = parse_grid(k, v);
         if (!(c.lambda_grid.lo > 0.0)) throw ConfigError(k, "lambda values must be > 0");
       }},
      {"numerics.quad_nodes", [](auto& c, auto& k, auto& v) { c.quad_nodes = positive_int(k, v); }},
      {"run.instances", [](auto& c, auto& k, auto& v) { c.instances = positive_int(k, v); }},
      {"run.seed", [](auto& c, auto& k, auto& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw ConfigError(k, "must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"run.jobs", [](auto& c, auto& k, auto& v) { c.jobs = positive_int(k, v); }},
      {"run.out", [](auto& c, auto&, auto& v) { c.out = v; }},
  };
  return table;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Generate: return "generate";
    case Command::RunRbp: return "run-rbp";
    case Command::RunGamp: return "run-gamp";
    case Command::RunSe: return "run-se";
    case Command::SolveEos: return "solve-eos";
    case Command::PhaseDiagram: return "phase-diagram";
    case Command::Compare: return "compare";
  }
  return "?";
}

Command parse_command(const std::string& s) {
  for (Command c : {Command::Generate, Command::RunRbp, Command::RunGamp, Command::RunSe, Command::SolveEos,
                    Command::PhaseDiagram, Command::Compare}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument(
      "unknown command '" + s + "' (expected generate|run-rbp|run-gamp|run-se|solve-eos|phase-diagram|compare)");
}

std::vector<double> GridSpec::values() const {
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) v[k] = lo + (hi - lo) * k / (count - 1);
  return v;
}

std::vector<SpeciesParam> ExperimentConfig::species_list() const {
  if (!species.empty()) return species;
  return {{p, alpha}};
}

Channel ExperimentConfig::make_channel() const { return parse_channel(channel, delta); }

Spreading ExperimentConfig::make_spreading() const {
  if (spreading != "auto") return parse_spreading(spreading);
  std::vector<int> ps;
  for (const auto& s : species_list()) ps.push_back(s.p);
  return default_spreading(ps);
}

InitScheme ExperimentConfig::make_scheme() const { return parse_init_scheme(scheme, a); }

ModelFamily ExperimentConfig::make_family() const {
  const auto sp = species_list();
  if (sp.size() > 2) throw ConfigError("model.species", "the replica solver handles at most two species");
  if (sp.size() == 2) {
    if (channel != "additive" || prior != Prior::Gaussian) {
      throw ConfigError("model.species", "mixed species require the gaussian prior and additive channel");
    }
    return ModelFamily::mixed(sp[0].p, sp[0].alpha, sp[1].p);
  }
  if (channel == "sign") {
    if (prior != Prior::Gaussian) throw ConfigError("model.prior", "the sign channel is solved for the gaussian prior only");
    return ModelFamily::gauss_sign(sp[0].p);
  }
  return prior == Prior::Ising ? ModelFamily::ising_gauss(sp[0].p) : ModelFamily::gauss_gauss(sp[0].p);
}

SEModel ExperimentConfig::make_se_model() const {
  SEModel m;
  m.prior = prior;
  m.channel = make_channel();
  m.lambda = lambda;
  m.species = species_list();
  if (quad_nodes > 0) m.quad.node_count = quad_nodes;
  return m;
}

double ExperimentConfig::effective_damping(Algorithm algorithm) const {
  return damping > 0.0 ? damping : default_damping(algorithm);
}

MpOptions ExperimentConfig::make_mp_options(Algorithm algorithm, std::uint64_t init_seed) const {
  MpOptions o;
  o.algorithm = algorithm;
  o.scheme = make_scheme();
  o.damping = effective_damping(algorithm);
  o.max_t = max_t;
  o.conv_tol = conv_tol;
  o.corrected = corrected;
  o.init_seed = init_seed;
  return o;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
  return {
      {"command", to_string(command)},
      {"model.prior", densefactor::to_string(prior)},
      {"model.channel", channel},
      {"model.delta", format_number(delta)},
      {"model.p", std::to_string(p)},
      {"model.species", species_string(species)},
      {"model.alpha", format_number(alpha)},
      {"model.lambda", format_number(lambda)},
      {"model.N", std::to_string(N)},
      {"model.M", std::to_string(M)},
      {"model.spreading", spreading},
      {"algorithm.scheme", scheme},
      {"algorithm.a", format_number(a)},
      {"algorithm.damping", format_number(damping)},
      {"algorithm.max_t", std::to_string(max_t)},
      {"algorithm.conv_tol", format_number(conv_tol)},
      {"algorithm.corrected", corrected ? "true" : "false"},
      {"algorithm.compare", compare_algorithm == Algorithm::RBP ? "rbp" : "gamp"},
      {"se.m0", opt(se_m0)},
      {"se.q0", opt(se_q0)},
      {"se.Q0", opt(se_Q0)},
      {"grid.alpha", grid_string(alpha_grid)},
      {"grid.lambda", grid_string(lambda_grid)},
      {"numerics.quad_nodes", std::to_string(quad_nodes)},
      {"run.instances", std::to_string(instances)},
      {"run.seed", std::to_string(seed)},
      {"run.jobs", std::to_string(jobs)},
      {"run.out", out},
  };
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(key, "unknown key");
  try {
    it->second(cfg, key, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void validate(const ExperimentConfig& cfg) {
  const auto sp = cfg.species_list();
  if (cfg.channel == "sign" && cfg.prior == Prior::Ising) {
    throw ConfigError("model.channel", "the sign channel requires the gaussian prior");
  }
  if (cfg.scheme == "sign-informative" && cfg.channel != "sign") {
    throw ConfigError("algorithm.scheme", "sign-informative initialization applies to the sign channel only");
  }
  for (const auto& s : sp) {
    if (cfg.command != Command::SolveEos && cfg.command != Command::PhaseDiagram && s.p > cfg.N) {
      throw ConfigError("model.N", fmt::format("N={} is smaller than the arity p={}", cfg.N, s.p));
    }
  }
  if (cfg.se_m0 && cfg.se_q0 && *cfg.se_m0 * *cfg.se_m0 > *cfg.se_q0 + 1e-12) {
    throw ConfigError("se.m0", "requires m0^2 <= q0");
  }
  if (cfg.se_Q0 && cfg.se_q0 && *cfg.se_Q0 < *cfg.se_q0) throw ConfigError("se.Q0", "requires Q0 >= q0");
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}", lineno), "expected 'section.key = value', got '" + line + "'");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::string text;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("config", "cannot read '" + path->string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return parse_config_text(text, overrides);
}

}  // namespace densefactor::cli
