#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace densefactor {

class FeasibilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxArity = 8;

struct SpeciesBlock {
  int p = 2;
  std::size_t edge_count = 0;
  std::size_t first_edge = 0;
  int degree = 0;  // target degree c_i; 0 for hand-built graphs
  double alpha_requested = 0.0;
  double alpha_effective = 0.0;
};

/**
 * p-uniform (or mixed) hypergraph. Edges of species s occupy the contiguous
 * range [first_edge, first_edge + edge_count). Members of edge e live in
 * members()[edge_offset(e) .. edge_offset(e+1)), sorted ascending; the
 * position in that flat array is called a slot.
 */
class FactorGraph {
 public:
  FactorGraph() = default;

  // Builds adjacency from per-species edge lists. Does not reject repeated
  // variables or duplicate edges; use validate() for that.
  static FactorGraph from_edges(std::size_t n_vars, const std::vector<int>& species_p,
                                const std::vector<std::vector<std::vector<int>>>& edges_by_species);

  std::size_t n_vars() const { return n_vars_; }
  std::size_t n_edges() const { return edge_species_.size(); }
  std::size_t n_slots() const { return members_.size(); }
  const std::vector<SpeciesBlock>& species() const { return species_; }

  int arity(std::size_t e) const { return static_cast<int>(edge_offset_[e + 1] - edge_offset_[e]); }
  std::size_t edge_offset(std::size_t e) const { return edge_offset_[e]; }
  int edge_species(std::size_t e) const { return edge_species_[e]; }
  std::span<const int> edge(std::size_t e) const {
    return {members_.data() + edge_offset_[e], members_.data() + edge_offset_[e + 1]};
  }
  const std::vector<int>& members() const { return members_; }
  std::size_t slot_edge(std::size_t slot) const { return slot_edge_[slot]; }

  // Merged adjacency: slots whose member is variable i, grouped by species.
  std::span<const std::size_t> incident_slots(std::size_t i) const {
    return {adj_slot_.data() + adj_offset_[i], adj_slot_.data() + adj_offset_[i + 1]};
  }
  // Per-species view of the same adjacency.
  std::span<const std::size_t> incident_slots(std::size_t i, int species) const;
  std::size_t degree(std::size_t i) const { return adj_offset_[i + 1] - adj_offset_[i]; }

  void set_species_metadata(std::size_t s, int degree, double alpha_requested, double alpha_effective);

  bool operator==(const FactorGraph& other) const;

 private:
  void build_adjacency();

  std::size_t n_vars_ = 0;
  std::vector<SpeciesBlock> species_;
  std::vector<std::size_t> edge_offset_{0};
  std::vector<int> members_;
  std::vector<int> edge_species_;
  std::vector<std::size_t> slot_edge_;
  std::vector<std::size_t> adj_offset_;
  std::vector<std::size_t> adj_species_offset_;  // n_vars * (n_species + 1)
  std::vector<std::size_t> adj_slot_;
};

FactorGraph sample_regular(std::size_t n_vars, int p, int c, std::uint64_t seed);

struct SpeciesRequest {
  int p = 2;
  double alpha = 1.0;
};

FactorGraph sample_mixed(std::size_t n_vars, int m_dim, const std::vector<SpeciesRequest>& species,
                         std::uint64_t seed);

struct GraphDiagnostics {
  std::vector<std::map<std::size_t, std::size_t>> degree_histogram;  // per species
  std::size_t duplicate_edges = 0;
  std::size_t within_edge_repeats = 0;
  std::size_t wrong_arity = 0;
  std::size_t irregular_variables = 0;
  std::size_t adjacency_mismatches = 0;

  std::size_t violations() const {
    return duplicate_edges + within_edge_repeats + wrong_arity + irregular_variables +
           adjacency_mismatches;
  }
};

GraphDiagnostics validate(const FactorGraph& graph);

// One line per edge: "species_id p v1 ... vp".
void write_graph_dump(const FactorGraph& graph, std::ostream& os);
FactorGraph read_graph_dump(std::size_t n_vars, std::istream& is);

}  // namespace densefactor
