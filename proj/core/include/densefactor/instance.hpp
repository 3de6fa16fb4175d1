#pragma once

#include "densefactor/channels.hpp"
#include "densefactor/hypergraph.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace densefactor {

/**
 * One teacher-student problem. truth is N x M row-major (i * M + mu);
 * spread is E x M row-major and left empty for deterministic spreading.
 */
struct Instance {
  FactorGraph graph;
  int m_dim = 1;
  double lambda = 1.0;
  Prior prior = Prior::Ising;
  Channel channel;
  Spreading spreading = Spreading::Deterministic;
  std::uint64_t seed = 0;
  std::vector<double> truth;
  std::vector<double> spread;
  std::vector<double> pi_star;
  std::vector<double> y;

  double spreading_at(std::size_t e, int mu) const {
    return spread.empty() ? 1.0 : spread[e * static_cast<std::size_t>(m_dim) + mu];
  }

  bool operator==(const Instance& other) const;
};

Instance generate_instance(const FactorGraph& graph, int m_dim, double lambda, Prior prior,
                           const Channel& channel, Spreading spreading, std::uint64_t seed);

double clean_signal(const Instance& inst, std::size_t edge_index);

inline constexpr std::uint8_t kInstanceFormatVersion = 1;

void save_instance(const Instance& inst, std::ostream& os);
Instance load_instance(std::istream& is);

}  // namespace densefactor
