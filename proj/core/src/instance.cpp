#include "densefactor/instance.hpp"

#include "densefactor/random.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace densefactor {

bool Instance::operator==(const Instance& o) const {
  return graph == o.graph && m_dim == o.m_dim && lambda == o.lambda && prior == o.prior &&
         channel.kind == o.channel.kind && channel.noise_std == o.channel.noise_std &&
         spreading == o.spreading && seed == o.seed && truth == o.truth && spread == o.spread &&
         pi_star == o.pi_star && y == o.y;
}

double clean_signal(const Instance& inst, std::size_t edge_index) {
  if (edge_index >= inst.graph.n_edges()) {
    throw std::out_of_range("clean_signal: edge index " + std::to_string(edge_index) + " out of range");
  }
  const auto members = inst.graph.edge(edge_index);
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  // Neumaier summation over mu
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t mu = 0; mu < M; ++mu) {
    double term = inst.spreading_at(edge_index, static_cast<int>(mu));
    for (int v : members) term *= inst.truth[static_cast<std::size_t>(v) * M + mu];
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return inst.lambda / std::sqrt(static_cast<double>(M)) * (sum + comp);
}

Instance generate_instance(const FactorGraph& graph, int m_dim, double lambda, Prior prior,
                           const Channel& channel, Spreading spreading, std::uint64_t seed) {
  if (m_dim < 1) throw std::invalid_argument("generate_instance: m_dim must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("generate_instance: lambda must be finite and > 0");
  }
  Instance inst;
  inst.graph = graph;
  inst.m_dim = m_dim;
  inst.lambda = lambda;
  inst.prior = prior;
  inst.channel = channel;
  inst.spreading = spreading;
  inst.seed = seed;

  const std::size_t M = static_cast<std::size_t>(m_dim);
  const std::size_t E = graph.n_edges();

  auto truth_rng = make_stream(seed, StreamLabel::Truth);
  inst.truth.resize(graph.n_vars() * M);
  if (prior == Prior::Ising) {
    std::bernoulli_distribution coin(0.5);
    for (double& x : inst.truth) x = coin(truth_rng) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : inst.truth) x = normal(truth_rng);
  }

  if (spreading != Spreading::Deterministic) {
    auto spread_rng = make_stream(seed, StreamLabel::Spreading);
    inst.spread.resize(E * M);
    if (spreading == Spreading::Rademacher) {
      std::bernoulli_distribution coin(0.5);
      for (double& f : inst.spread) f = coin(spread_rng) ? 1.0 : -1.0;
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& f : inst.spread) f = normal(spread_rng);
    }
  }

  inst.pi_star.resize(E);
  for (std::size_t e = 0; e < E; ++e) inst.pi_star[e] = clean_signal(inst, e);

  auto noise_rng = make_stream(seed, StreamLabel::Noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.y.resize(E);
  for (std::size_t e = 0; e < E; ++e) inst.y[e] = channel_forward(channel, inst.pi_star[e], normal(noise_rng));
  return inst;
}

namespace {

constexpr char kMagic[4] = {'D', 'F', 'I', 'N'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put<std::uint64_t>(os, v.size());
  if (!v.empty()) os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("instance file truncated");
  return v;
}

template <class T>
std::vector<T> get_vec(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 40)) throw std::runtime_error("instance file: implausible array length");
  std::vector<T> v(n);
  if (n > 0 && !is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw std::runtime_error("instance file truncated");
  }
  return v;
}

}  // namespace

void save_instance(const Instance& inst, std::ostream& os) {
  os.write(kMagic, 4);
  put<std::uint8_t>(os, kInstanceFormatVersion);
  const FactorGraph& g = inst.graph;
  put<std::uint64_t>(os, g.n_vars());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.species().size()));
  for (const auto& s : g.species()) {
    put<std::int32_t>(os, s.p);
    put<std::uint64_t>(os, s.edge_count);
    put<std::int32_t>(os, s.degree);
    put<double>(os, s.alpha_requested);
    put<double>(os, s.alpha_effective);
  }
  put_vec(os, g.members());
  put<std::int32_t>(os, inst.m_dim);
  put<double>(os, inst.lambda);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(inst.prior));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(inst.channel.kind));
  put<double>(os, inst.channel.noise_std);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(inst.spreading));
  put<std::uint64_t>(os, inst.seed);
  put_vec(os, inst.truth);
  put_vec(os, inst.spread);
  put_vec(os, inst.pi_star);
  put_vec(os, inst.y);
  if (!os) throw std::runtime_error("save_instance: write failed");
}

Instance load_instance(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("load_instance: not an instance file");
  }
  const auto version = get<std::uint8_t>(is);
  if (version != kInstanceFormatVersion) {
    throw std::runtime_error("load_instance: unsupported format version " + std::to_string(version));
  }
  const auto n_vars = get<std::uint64_t>(is);
  const auto n_species = get<std::uint32_t>(is);
  std::vector<SpeciesBlock> blocks(n_species);
  for (auto& s : blocks) {
    s.p = get<std::int32_t>(is);
    s.edge_count = get<std::uint64_t>(is);
    s.degree = get<std::int32_t>(is);
    s.alpha_requested = get<double>(is);
    s.alpha_effective = get<double>(is);
  }
  const auto members = get_vec<int>(is);
  std::vector<int> ps;
  std::vector<std::vector<std::vector<int>>> edges(n_species);
  std::size_t cursor = 0;
  for (std::uint32_t s = 0; s < n_species; ++s) {
    ps.push_back(blocks[s].p);
    for (std::size_t e = 0; e < blocks[s].edge_count; ++e) {
      if (cursor + blocks[s].p > members.size()) throw std::runtime_error("load_instance: member list too short");
      edges[s].emplace_back(members.begin() + static_cast<std::ptrdiff_t>(cursor),
                            members.begin() + static_cast<std::ptrdiff_t>(cursor + blocks[s].p));
      cursor += blocks[s].p;
    }
  }
  Instance inst;
  inst.graph = FactorGraph::from_edges(n_vars, ps, edges);
  for (std::uint32_t s = 0; s < n_species; ++s) {
    inst.graph.set_species_metadata(s, blocks[s].degree, blocks[s].alpha_requested, blocks[s].alpha_effective);
  }
  inst.m_dim = get<std::int32_t>(is);
  inst.lambda = get<double>(is);
  inst.prior = static_cast<Prior>(get<std::uint8_t>(is));
  inst.channel.kind = static_cast<Channel::Kind>(get<std::uint8_t>(is));
  inst.channel.noise_std = get<double>(is);
  inst.spreading = static_cast<Spreading>(get<std::uint8_t>(is));
  inst.seed = get<std::uint64_t>(is);
  inst.truth = get_vec<double>(is);
  inst.spread = get_vec<double>(is);
  inst.pi_star = get_vec<double>(is);
  inst.y = get_vec<double>(is);
  return inst;
}

}  // namespace densefactor
