#include "densefactor/hypergraph.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace df = densefactor;
using df::testing::for_all;
using df::testing::Gen;

namespace {

// Independent recount of degrees, duplicates and repeats from the raw edge list.
struct Recount {
  std::vector<std::vector<int>> degree;  // per species
  std::size_t duplicates = 0;
  std::size_t repeats = 0;
};

Recount recount(const df::FactorGraph& g) {
  Recount r;
  r.degree.assign(g.species().size(), std::vector<int>(g.n_vars(), 0));
  std::vector<std::set<std::vector<int>>> seen(g.species().size());
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const int s = g.edge_species(e);
    std::vector<int> mem(g.edge(e).begin(), g.edge(e).end());
    for (int v : mem) ++r.degree[s][v];
    std::sort(mem.begin(), mem.end());
    if (std::adjacent_find(mem.begin(), mem.end()) != mem.end()) ++r.repeats;
    if (!seen[s].insert(mem).second) ++r.duplicates;
  }
  return r;
}

void expect_regular(const df::FactorGraph& g, int p, int c) {
  const Recount r = recount(g);
  EXPECT_EQ(r.duplicates, 0u);
  EXPECT_EQ(r.repeats, 0u);
  for (int d : r.degree[0]) ASSERT_EQ(d, c);
  for (std::size_t e = 0; e < g.n_edges(); ++e) ASSERT_EQ(g.arity(e), p);
  EXPECT_EQ(df::validate(g).violations(), 0u);
}

// Adjacency must be the exact inverse of the edge list.
void expect_adjacency_inverse(const df::FactorGraph& g) {
  std::vector<std::multiset<std::size_t>> from_edges(g.n_vars());
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    for (int v : g.edge(e)) from_edges[v].insert(e);
  }
  for (std::size_t i = 0; i < g.n_vars(); ++i) {
    std::multiset<std::size_t> from_adj;
    for (std::size_t slot : g.incident_slots(i)) {
      ASSERT_EQ(g.members()[slot], static_cast<int>(i));
      from_adj.insert(g.slot_edge(slot));
    }
    ASSERT_EQ(from_adj, from_edges[i]) << "variable " << i;
  }
}

}  // namespace

TEST(SampleRegular, SmallExample) {
  const auto g = df::sample_regular(6, 3, 2, 123);
  EXPECT_EQ(g.n_edges(), 4u);
  expect_regular(g, 3, 2);
}

TEST(SampleRegular, DegenerateInfeasible) {
  EXPECT_THROW(df::sample_regular(3, 3, 2, 1), df::FeasibilityError);
}

TEST(SampleRegular, OtherInfeasibleInputs) {
  EXPECT_THROW(df::sample_regular(7, 2, 3, 1), df::FeasibilityError);  // N c not divisible by p
  EXPECT_THROW(df::sample_regular(2, 3, 3, 1), df::FeasibilityError);  // N < p
  EXPECT_THROW(df::sample_regular(10, 2, 0, 1), df::FeasibilityError);
  EXPECT_THROW(df::sample_regular(10, 1, 2, 1), df::FeasibilityError);
}

TEST(SampleRegular, LargeP2) {
  const auto g = df::sample_regular(1000, 2, 50, 7);
  EXPECT_EQ(g.n_edges(), 25000u);
  expect_regular(g, 2, 50);
  expect_adjacency_inverse(g);
}

TEST(SampleRegular, Deterministic) {
  const auto a = df::sample_regular(300, 3, 30, 99);
  const auto b = df::sample_regular(300, 3, 30, 99);
  EXPECT_TRUE(a == b);
  const auto c = df::sample_regular(300, 3, 30, 100);
  EXPECT_FALSE(a == c);
}

TEST(SampleRegular, HundredSeedsAllShapes) {
  for (auto [n, p, c] : {std::tuple{300, 2, 20}, std::tuple{300, 3, 30}, std::tuple{600, 4, 40}}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SCOPED_TRACE(testing::Message() << "N=" << n << " p=" << p << " c=" << c << " seed=" << seed);
      const auto g = df::sample_regular(n, p, c, seed);
      ASSERT_EQ(g.n_edges(), static_cast<std::size_t>(n * c / p));
      expect_regular(g, p, c);
      if (testing::Test::HasFailure()) return;
    }
  }
}

TEST(SampleRegular, HandshakeProperty) {
  for_all(30, 3, [](Gen& gen, int) {
    const int p = gen.integer(2, 4);
    const int n = p * gen.integer(5, 40);
    const int c = gen.integer(1, 6);
    const auto g = df::sample_regular(n, p, c, gen.integer(0, 1 << 20));
    std::size_t total = 0;
    for (std::size_t i = 0; i < g.n_vars(); ++i) total += g.degree(i);
    EXPECT_EQ(total, static_cast<std::size_t>(p) * g.n_edges());
    expect_regular(g, p, c);
    expect_adjacency_inverse(g);
  });
}

TEST(SampleMixed, EdgeCounts) {
  const auto g = df::sample_mixed(60, 5, {{2, 2.0}, {3, 3.0}}, 4);
  ASSERT_EQ(g.species().size(), 2u);
  EXPECT_EQ(g.species()[0].edge_count, 300u);
  EXPECT_EQ(g.species()[1].edge_count, 300u);
  EXPECT_EQ(df::validate(g).violations(), 0u);
  const Recount r = recount(g);
  for (int d : r.degree[0]) ASSERT_EQ(d, 10);
  for (int d : r.degree[1]) ASSERT_EQ(d, 15);
  for (std::size_t i = 0; i < g.n_vars(); ++i) {
    EXPECT_EQ(g.incident_slots(i, 0).size(), 10u);
    EXPECT_EQ(g.incident_slots(i, 1).size(), 15u);
    EXPECT_EQ(g.degree(i), 25u);
  }
  expect_adjacency_inverse(g);
}

TEST(SampleMixed, SingleSpeciesReducesToRegular) {
  const auto a = df::sample_mixed(200, 10, {{3, 1.5}}, 17);
  const auto b = df::sample_regular(200, 3, 15, 17);
  ASSERT_EQ(a.n_edges(), b.n_edges());
  for (std::size_t e = 0; e < a.n_edges(); ++e) {
    ASSERT_TRUE(std::equal(a.edge(e).begin(), a.edge(e).end(), b.edge(e).begin()));
  }
}

TEST(SampleMixed, ZeroAlphaSpecies) {
  const auto g = df::sample_mixed(60, 5, {{2, 2.0}, {3, 0.0}}, 4);
  EXPECT_EQ(g.species()[1].edge_count, 0u);
  EXPECT_EQ(g.species()[0].edge_count, 300u);
  EXPECT_EQ(df::validate(g).violations(), 0u);
}

TEST(SampleMixed, InvalidRequests) {
  EXPECT_THROW(df::sample_mixed(60, 0, {{2, 2.0}}, 1), df::FeasibilityError);
  EXPECT_THROW(df::sample_mixed(60, 5, {}, 1), df::FeasibilityError);
  EXPECT_THROW(df::sample_mixed(60, 5, {{2, -1.0}}, 1), df::FeasibilityError);
}

TEST(Validate, RepeatedVariableInsideEdge) {
  const auto g = df::FactorGraph::from_edges(4, {3}, {{{0, 1, 1}, {1, 2, 3}}});
  const auto d = df::validate(g);
  EXPECT_EQ(d.within_edge_repeats, 1u);
  EXPECT_EQ(d.duplicate_edges, 0u);
}

TEST(Validate, DuplicatedEdge) {
  const auto g = df::FactorGraph::from_edges(4, {2}, {{{0, 1}, {2, 3}, {1, 0}}});
  const auto d = df::validate(g);
  EXPECT_EQ(d.duplicate_edges, 1u);
  EXPECT_EQ(d.within_edge_repeats, 0u);
}

TEST(Validate, FromEdgesRejectsOutOfRange) {
  EXPECT_THROW(df::FactorGraph::from_edges(3, {2}, {{{0, 3}}}), std::out_of_range);
}

TEST(GraphDump, RoundTrip) {
  const auto g = df::sample_mixed(60, 5, {{2, 2.0}, {3, 3.0}}, 8);
  std::stringstream ss;
  df::write_graph_dump(g, ss);
  std::string first;
  std::getline(ss, first);
  EXPECT_EQ(first.rfind("0 2 ", 0), 0u) << first;
  ss.seekg(0);
  const auto back = df::read_graph_dump(60, ss);
  ASSERT_EQ(back.n_edges(), g.n_edges());
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    ASSERT_EQ(back.edge_species(e), g.edge_species(e));
    ASSERT_TRUE(std::equal(back.edge(e).begin(), back.edge(e).end(), g.edge(e).begin()));
  }
}
