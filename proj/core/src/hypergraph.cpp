#include "densefactor/hypergraph.hpp"

#include "densefactor/random.hpp"

#include <boost/functional/hash.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace densefactor {

FactorGraph FactorGraph::from_edges(std::size_t n_vars, const std::vector<int>& species_p,
                                    const std::vector<std::vector<std::vector<int>>>& edges_by_species) {
  if (species_p.size() != edges_by_species.size()) {
    throw std::invalid_argument("from_edges: species_p and edges_by_species differ in length");
  }
  FactorGraph g;
  g.n_vars_ = n_vars;
  for (std::size_t s = 0; s < species_p.size(); ++s) {
    SpeciesBlock block;
    block.p = species_p[s];
    block.first_edge = g.edge_species_.size();
    block.edge_count = edges_by_species[s].size();
    for (const auto& edge : edges_by_species[s]) {
      std::vector<int> sorted(edge);
      std::sort(sorted.begin(), sorted.end());
      for (int v : sorted) {
        if (v < 0 || static_cast<std::size_t>(v) >= n_vars) {
          throw std::out_of_range("from_edges: variable index " + std::to_string(v) + " out of range");
        }
        g.members_.push_back(v);
      }
      g.edge_offset_.push_back(g.members_.size());
      g.edge_species_.push_back(static_cast<int>(s));
    }
    g.species_.push_back(block);
  }
  g.build_adjacency();
  return g;
}

void FactorGraph::build_adjacency() {
  const std::size_t n_species = species_.size();
  slot_edge_.assign(members_.size(), 0);
  for (std::size_t e = 0; e < n_edges(); ++e) {
    for (std::size_t k = edge_offset_[e]; k < edge_offset_[e + 1]; ++k) slot_edge_[k] = e;
  }
  std::vector<std::size_t> counts(n_vars_ * n_species, 0);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const int s = edge_species_[slot_edge_[k]];
    ++counts[static_cast<std::size_t>(members_[k]) * n_species + s];
  }
  adj_offset_.assign(n_vars_ + 1, 0);
  adj_species_offset_.assign(n_vars_ * (n_species + 1), 0);
  std::size_t running = 0;
  for (std::size_t i = 0; i < n_vars_; ++i) {
    adj_offset_[i] = running;
    for (std::size_t s = 0; s < n_species; ++s) {
      adj_species_offset_[i * (n_species + 1) + s] = running;
      running += counts[i * n_species + s];
    }
    adj_species_offset_[i * (n_species + 1) + n_species] = running;
  }
  adj_offset_[n_vars_] = running;
  adj_slot_.assign(running, 0);
  std::vector<std::size_t> cursor(n_vars_ * n_species);
  for (std::size_t i = 0; i < n_vars_; ++i) {
    for (std::size_t s = 0; s < n_species; ++s) {
      cursor[i * n_species + s] = adj_species_offset_[i * (n_species + 1) + s];
    }
  }
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const int s = edge_species_[slot_edge_[k]];
    adj_slot_[cursor[static_cast<std::size_t>(members_[k]) * n_species + s]++] = k;
  }
}

std::span<const std::size_t> FactorGraph::incident_slots(std::size_t i, int species) const {
  const std::size_t stride = species_.size() + 1;
  const std::size_t lo = adj_species_offset_[i * stride + species];
  const std::size_t hi = adj_species_offset_[i * stride + species + 1];
  return {adj_slot_.data() + lo, adj_slot_.data() + hi};
}

void FactorGraph::set_species_metadata(std::size_t s, int degree, double alpha_requested,
                                       double alpha_effective) {
  species_.at(s).degree = degree;
  species_.at(s).alpha_requested = alpha_requested;
  species_.at(s).alpha_effective = alpha_effective;
}

bool FactorGraph::operator==(const FactorGraph& other) const {
  if (n_vars_ != other.n_vars_ || species_.size() != other.species_.size()) return false;
  for (std::size_t s = 0; s < species_.size(); ++s) {
    const auto& a = species_[s];
    const auto& b = other.species_[s];
    if (a.p != b.p || a.edge_count != b.edge_count || a.first_edge != b.first_edge ||
        a.degree != b.degree || a.alpha_requested != b.alpha_requested ||
        a.alpha_effective != b.alpha_effective) {
      return false;
    }
  }
  return edge_offset_ == other.edge_offset_ && members_ == other.members_ &&
         edge_species_ == other.edge_species_;
}

namespace {

using EdgeKey = std::array<int, kMaxArity>;

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const { return boost::hash_range(k.begin(), k.end()); }
};

EdgeKey make_key(const int* first, int p) {
  EdgeKey key;
  key.fill(-1);
  std::copy(first, first + p, key.begin());
  std::sort(key.begin(), key.begin() + p);
  return key;
}

int repeat_count(const EdgeKey& key, int p) {
  int n = 0;
  for (int k = 1; k < p; ++k) n += key[k] == key[k - 1];
  return n;
}

bool has_repeat(const EdgeKey& key, int p) { return repeat_count(key, p) > 0; }

// log of the binomial coefficient, for the feasibility check only
double log_binom(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_feasible(std::size_t n_vars, int p, int c) {
  if (p < 2 || p > kMaxArity) {
    throw FeasibilityError("p must lie in [2, " + std::to_string(kMaxArity) + "], got " +
                           std::to_string(p));
  }
  if (c < 0) throw FeasibilityError("degree c must be non-negative");
  if (c == 0) return;
  if (n_vars < static_cast<std::size_t>(p)) {
    throw FeasibilityError("n_vars=" + std::to_string(n_vars) + " is smaller than p=" + std::to_string(p));
  }
  if ((n_vars * static_cast<std::size_t>(c)) % static_cast<std::size_t>(p) != 0) {
    throw FeasibilityError("n_vars*c=" + std::to_string(n_vars * c) + " is not divisible by p=" +
                           std::to_string(p));
  }
  // distinct p-plets through a fixed variable must outnumber its degree
  if (log_binom(static_cast<double>(n_vars) - 1.0, p - 1.0) <= std::log(static_cast<double>(c)) + 1e-12) {
    throw FeasibilityError("only C(" + std::to_string(n_vars - 1) + "," + std::to_string(p - 1) +
                           ") distinct p-plets contain each variable, not more than c=" +
                           std::to_string(c));
  }
}

// Configuration model plus edge-swap repair. Returns edges as a flat list.
std::vector<int> sample_species(std::size_t n_vars, int p, int c, std::mt19937_64& rng) {
  check_feasible(n_vars, p, c);
  const std::size_t n_stubs = n_vars * static_cast<std::size_t>(c);
  const std::size_t n_edges = n_stubs / static_cast<std::size_t>(p);
  std::vector<int> stubs(n_stubs);
  for (std::size_t i = 0; i < n_vars; ++i) {
    std::fill_n(stubs.begin() + static_cast<std::ptrdiff_t>(i * c), c, static_cast<int>(i));
  }
  std::shuffle(stubs.begin(), stubs.end(), rng);
  if (n_edges == 0) return stubs;

  std::unordered_map<EdgeKey, std::size_t, EdgeKeyHash> count;
  count.reserve(n_edges * 2);
  std::vector<std::size_t> bad;
  for (std::size_t e = 0; e < n_edges; ++e) {
    const EdgeKey key = make_key(&stubs[e * p], p);
    const bool duplicate = count[key]++ > 0;
    if (duplicate || has_repeat(key, p)) bad.push_back(e);
  }

  auto is_bad = [&](std::size_t e) {
    const EdgeKey key = make_key(&stubs[e * p], p);
    return has_repeat(key, p) || count[key] > 1;
  };

  std::uniform_int_distribution<std::size_t> pick_edge(0, n_edges - 1);
  std::uniform_int_distribution<int> pick_slot(0, p - 1);
  const std::size_t budget = 100 * n_edges;
  std::size_t attempts = 0;
  while (!bad.empty()) {
    const std::size_t e = bad.back();
    if (!is_bad(e)) {
      bad.pop_back();
      continue;
    }
    if (++attempts > budget) {
      throw SamplingError("edge-swap repair budget of " + std::to_string(budget) +
                          " swaps exhausted with " + std::to_string(bad.size()) + " bad edges left");
    }
    const EdgeKey old_e = make_key(&stubs[e * p], p);
    int a = pick_slot(rng);
    if (has_repeat(old_e, p)) {
      // move one copy of the repeated variable out
      for (int k = 0; k < p; ++k) {
        for (int j = k + 1; j < p; ++j) {
          if (stubs[e * p + k] == stubs[e * p + j]) a = j;
        }
      }
    }
    const std::size_t f = pick_edge(rng);
    if (f == e) continue;
    const int b = pick_slot(rng);
    if (stubs[e * p + a] == stubs[f * p + b]) continue;

    const EdgeKey old_f = make_key(&stubs[f * p], p);
    std::swap(stubs[e * p + a], stubs[f * p + b]);
    const EdgeKey new_e = make_key(&stubs[e * p], p);
    const EdgeKey new_f = make_key(&stubs[f * p], p);
    // an edge with a variable repeated more than twice needs several swaps
    const bool e_fixed = !has_repeat(new_e, p);
    const bool e_progress = !e_fixed && repeat_count(new_e, p) < repeat_count(old_e, p);
    bool ok = (e_fixed || e_progress) && !has_repeat(new_f, p) && new_e != new_f;
    if (ok) {
      auto present = [&](const EdgeKey& k) {
        auto it = count.find(k);
        std::size_t n = it == count.end() ? 0 : it->second;
        if (k == old_e) --n;
        if (k == old_f) --n;
        return n > 0;
      };
      ok = !(e_fixed && present(new_e)) && !present(new_f);
    }
    if (!ok) {
      std::swap(stubs[e * p + a], stubs[f * p + b]);
      continue;
    }
    if (--count[old_e] == 0) count.erase(old_e);
    if (--count[old_f] == 0) count.erase(old_f);
    ++count[new_e];
    ++count[new_f];
  }
  return stubs;
}

}  // namespace

FactorGraph sample_regular(std::size_t n_vars, int p, int c, std::uint64_t seed) {
  if (c < 1) throw FeasibilityError("degree c must be >= 1");
  auto rng = make_stream(seed, StreamLabel::Graph, 0);
  const std::vector<int> flat = sample_species(n_vars, p, c, rng);
  std::vector<std::vector<int>> edges(flat.size() / p);
  for (std::size_t e = 0; e < edges.size(); ++e) edges[e].assign(&flat[e * p], &flat[e * p] + p);
  FactorGraph g = FactorGraph::from_edges(n_vars, {p}, {edges});
  g.set_species_metadata(0, c, 0.0, 0.0);
  return g;
}

FactorGraph sample_mixed(std::size_t n_vars, int m_dim, const std::vector<SpeciesRequest>& species,
                         std::uint64_t seed) {
  if (m_dim < 1) throw FeasibilityError("m_dim must be >= 1");
  if (species.empty()) throw FeasibilityError("at least one species is required");
  std::vector<int> ps;
  std::vector<std::vector<std::vector<int>>> edges_by_species;
  std::vector<int> degrees;
  for (std::size_t s = 0; s < species.size(); ++s) {
    const auto& req = species[s];
    if (!(req.alpha >= 0.0) || !std::isfinite(req.alpha)) {
      throw FeasibilityError("species " + std::to_string(s) + ": alpha must be finite and >= 0");
    }
    const int c = static_cast<int>(std::llround(req.alpha * m_dim));
    auto rng = make_stream(seed, StreamLabel::Graph, static_cast<std::uint32_t>(s));
    std::vector<int> flat;
    try {
      flat = sample_species(n_vars, req.p, c, rng);
    } catch (const FeasibilityError& err) {
      throw FeasibilityError("species " + std::to_string(s) + ": " + err.what());
    }
    std::vector<std::vector<int>> edges(flat.size() / req.p);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      edges[e].assign(&flat[e * req.p], &flat[e * req.p] + req.p);
    }
    ps.push_back(req.p);
    edges_by_species.push_back(std::move(edges));
    degrees.push_back(c);
  }
  FactorGraph g = FactorGraph::from_edges(n_vars, ps, edges_by_species);
  for (std::size_t s = 0; s < species.size(); ++s) {
    g.set_species_metadata(s, degrees[s], species[s].alpha,
                           static_cast<double>(degrees[s]) / m_dim);
  }
  return g;
}

GraphDiagnostics validate(const FactorGraph& graph) {
  GraphDiagnostics d;
  const auto& species = graph.species();
  d.degree_histogram.resize(species.size());
  for (std::size_t s = 0; s < species.size(); ++s) {
    const auto& block = species[s];
    std::unordered_map<EdgeKey, std::size_t, EdgeKeyHash> seen;
    for (std::size_t e = block.first_edge; e < block.first_edge + block.edge_count; ++e) {
      const auto members = graph.edge(e);
      const int p = static_cast<int>(members.size());
      if (p != block.p || p > kMaxArity) {
        ++d.wrong_arity;
        continue;
      }
      const EdgeKey key = make_key(members.data(), p);
      if (has_repeat(key, p)) ++d.within_edge_repeats;
      if (seen[key]++ > 0) ++d.duplicate_edges;
    }
    for (std::size_t i = 0; i < graph.n_vars(); ++i) {
      const std::size_t deg = graph.incident_slots(i, static_cast<int>(s)).size();
      ++d.degree_histogram[s][deg];
      if (block.degree > 0 && deg != static_cast<std::size_t>(block.degree)) ++d.irregular_variables;
    }
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < graph.n_vars(); ++i) {
    for (std::size_t slot : graph.incident_slots(i)) {
      if (slot >= graph.n_slots() || graph.members()[slot] != static_cast<int>(i)) ++d.adjacency_mismatches;
      ++total;
    }
  }
  if (total != graph.n_slots()) ++d.adjacency_mismatches;
  return d;
}

void write_graph_dump(const FactorGraph& graph, std::ostream& os) {
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const auto members = graph.edge(e);
    os << graph.edge_species(e) << ' ' << members.size();
    for (int v : members) os << ' ' << v;
    os << '\n';
  }
}

FactorGraph read_graph_dump(std::size_t n_vars, std::istream& is) {
  std::vector<int> ps;
  std::vector<std::vector<std::vector<int>>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int s = 0;
    int p = 0;
    if (!(ls >> s >> p) || s < 0 || p < 1) {
      throw std::runtime_error("graph dump line " + std::to_string(lineno) + ": malformed header");
    }
    if (static_cast<std::size_t>(s) >= ps.size()) {
      ps.resize(s + 1, 0);
      edges.resize(s + 1);
    }
    if (ps[s] == 0) ps[s] = p;
    std::vector<int> e(p);
    for (int k = 0; k < p; ++k) {
      if (!(ls >> e[k])) {
        throw std::runtime_error("graph dump line " + std::to_string(lineno) + ": missing member");
      }
    }
    edges[s].push_back(std::move(e));
  }
  return FactorGraph::from_edges(n_vars, ps, edges);
}

}  // namespace densefactor
