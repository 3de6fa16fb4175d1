#include "densefactor/cli.hpp"

#include "densefactor/hypergraph.hpp"
#include "densefactor/instance.hpp"
#include "densefactor/trajectory.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace densefactor::cli {

namespace {

namespace fs = std::filesystem;

fs::path resolve_out(const ExperimentConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("DENSEFACTOR_OUT"); env != nullptr && *env != '\0') return env;
  return {};
}

Metadata base_metadata(const ExperimentConfig& cfg) {
  Metadata meta{{"artifact_version", kArtifactVersion}};
  for (auto& kv : cfg.entries()) meta.push_back(std::move(kv));
  return meta;
}

std::uint64_t instance_seed(const ExperimentConfig& cfg, int k) { return cfg.seed + static_cast<std::uint64_t>(k); }

FactorGraph make_graph(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto sp = cfg.species_list();
  const auto N = static_cast<std::size_t>(cfg.N);
  if (sp.size() == 1) {
    const int c = static_cast<int>(std::llround(sp[0].alpha * cfg.M));
    return sample_regular(N, sp[0].p, c, seed);
  }
  std::vector<SpeciesRequest> req;
  for (const auto& s : sp) req.push_back({s.p, s.alpha});
  return sample_mixed(N, cfg.M, req, seed);
}

Instance make_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  return generate_instance(make_graph(cfg, seed), cfg.M, cfg.lambda, cfg.prior, cfg.make_channel(),
                           cfg.make_spreading(), seed);
}

// Runs body(k) for k in [0, n) on up to jobs threads; rethrows the lowest-index failure.
template <class Body>
void parallel_for(int n, int jobs, Body body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        body(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(n, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return os;
}

void write_averaged_csv(std::ostream& os, const std::vector<AveragedRecord>& rows, const Metadata& meta) {
  write_metadata(os, meta);
  os << "t,m,q,Q,D,mse_in,mse_out,count\n";
  for (const auto& r : rows) {
    os << r.t << ',' << format_number(r.m) << ',' << format_number(r.q) << ',' << format_number(r.Q) << ','
       << format_number(r.D) << ',' << format_number(r.mse_in) << ',' << format_number(r.mse_out) << ','
       << r.count << '\n';
  }
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows, const Metadata& meta) {
  write_metadata(os, meta);
  os << "t,count,m_amp,q_amp,Q_amp,D_amp,m_se,q_se,Q_se,dev_m,dev_q,dev_Q\n";
  for (const auto& r : rows) {
    os << r.t << ',' << r.amp.count << ',' << format_number(r.amp.m) << ',' << format_number(r.amp.q) << ','
       << format_number(r.amp.Q) << ',' << format_number(r.amp.D) << ',' << format_number(r.m_se) << ','
       << format_number(r.q_se) << ',' << format_number(r.Q_se) << ',' << format_number(r.dev_m) << ','
       << format_number(r.dev_q) << ',' << format_number(r.dev_Q) << '\n';
  }
}

void write_eos_csv(std::ostream& os, const std::vector<EosRow>& rows, const Metadata& meta) {
  write_metadata(os, meta);
  os << "alpha,lambda,m,kind,stable,free_energy,dominant\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.branches.solutions.size(); ++k) {
      const auto& s = row.branches.solutions[k];
      os << format_number(row.alpha) << ',' << format_number(row.lambda) << ',' << format_number(s.m) << ','
         << to_string(s.kind) << ',' << (s.stable ? 1 : 0) << ',' << format_number(s.free_energy) << ','
         << (k == row.branches.dominant ? 1 : 0) << '\n';
    }
  }
}

// Nominal (m, q, Q) of the init scheme; explicit se.* settings take precedence.
SEState scheme_start(const ExperimentConfig& cfg) {
  SEState s;
  const InitScheme scheme = cfg.make_scheme();
  switch (scheme.kind) {
    case InitScheme::Kind::Informative: s.m = s.q = 1.0; break;
    case InitScheme::Kind::Uninformative:
    case InitScheme::Kind::SignInformative: s.m = s.q = scheme.a; break;
    case InitScheme::Kind::TrulyRandom: s.m = 0.0; s.q = scheme.a; break;
  }
  s.Q = 1.0;
  if (cfg.se_m0) s.m = *cfg.se_m0;
  if (cfg.se_q0) s.q = *cfg.se_q0;
  if (cfg.se_Q0) s.Q = *cfg.se_Q0;
  return s;
}

ReplicaOptions replica_options(const ExperimentConfig& cfg) {
  ReplicaOptions opt;
  if (cfg.quad_nodes > 0) opt.quad.node_count = cfg.quad_nodes;
  return opt;
}

// The replica families are written for unit noise; lambda enters as lambda / Delta.
double replica_lambda(const ExperimentConfig& cfg) {
  return cfg.channel == "additive" ? cfg.lambda / cfg.delta : cfg.lambda;
}

// Mixed families take the second species' alpha at the call site.
double replica_alpha(const ExperimentConfig& cfg) {
  const auto sp = cfg.species_list();
  return sp.size() == 2 ? sp[1].alpha : cfg.alpha;
}

}  // namespace

std::vector<AveragedRecord> average_trajectories(const std::vector<Trajectory>& runs) {
  std::size_t steps = 0;
  for (const auto& r : runs) steps = std::max(steps, r.records.size());
  std::vector<AveragedRecord> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    AveragedRecord& a = out[t];
    a.t = static_cast<int>(t);
    for (const auto& r : runs) {
      if (t >= r.records.size()) continue;
      const auto& x = r.records[t];
      a.m += x.m;
      a.q += x.q;
      a.Q += x.Q;
      a.D += x.D;
      a.mse_in += x.mse_in;
      a.mse_out += x.mse_out;
      ++a.count;
    }
    const double n = a.count;
    a.m /= n;
    a.q /= n;
    a.Q /= n;
    a.D /= n;
    a.mse_in /= n;
    a.mse_out /= n;
  }
  return out;
}

std::vector<CompareRow> join_compare(const std::vector<AveragedRecord>& amp, const Trajectory& se) {
  if (se.records.empty()) throw std::invalid_argument("join_compare: empty state evolution trajectory");
  std::vector<CompareRow> rows;
  for (const auto& a : amp) {
    const auto& s = se.records[std::min<std::size_t>(a.t, se.records.size() - 1)];
    CompareRow r;
    r.t = a.t;
    r.amp = a;
    r.m_se = s.m;
    r.q_se = s.q;
    r.Q_se = s.Q;
    r.dev_m = std::abs(a.m - s.m);
    r.dev_q = std::abs(a.q - s.q);
    r.dev_Q = std::abs(a.Q - s.Q);
    rows.push_back(r);
  }
  return rows;
}

std::pair<double, int> max_deviation(const std::vector<CompareRow>& rows) {
  double worst = 0.0;
  int step = 0;
  for (const auto& r : rows) {
    if (r.dev_m > worst) {
      worst = r.dev_m;
      step = r.t;
    }
  }
  return {worst, step};
}

std::vector<Trajectory> run_instances(const ExperimentConfig& cfg, Algorithm algorithm) {
  std::vector<Trajectory> runs(static_cast<std::size_t>(cfg.instances));
  parallel_for(cfg.instances, cfg.jobs, [&](int k) {
    const std::uint64_t seed = instance_seed(cfg, k);
    const Instance inst = make_instance(cfg, seed);
    runs[k] = run_mp(inst, cfg.make_mp_options(algorithm, seed));
  });
  return runs;
}

Artifacts run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  Artifacts art;
  art.command = cfg.command;
  const fs::path out = resolve_out(cfg);
  if (!out.empty()) fs::create_directories(out);
  const Metadata meta = base_metadata(cfg);
  std::mutex write_mutex;

  auto emit = [&](const std::string& name, auto&& writer) {
    if (out.empty()) return;
    const std::lock_guard lock(write_mutex);
    const fs::path path = out / name;
    auto os = open_output(path);
    writer(os);
    if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
    art.files.push_back(path);
  };

  switch (cfg.command) {
    case Command::Generate: {
      parallel_for(cfg.instances, cfg.jobs, [&](int k) {
        const Instance inst = make_instance(cfg, instance_seed(cfg, k));
        emit(fmt::format("instance_{}.bin", k), [&](std::ostream& os) { save_instance(inst, os); });
      });
      emit("generate.meta", [&](std::ostream& os) {
        write_metadata(os, meta);
        for (int k = 0; k < cfg.instances; ++k) {
          os << "# instance_" << k << "_seed=" << instance_seed(cfg, k) << '\n';
        }
      });
      std::sort(art.files.begin(), art.files.end());
      break;
    }
    case Command::RunRbp:
    case Command::RunGamp: {
      const Algorithm alg = cfg.command == Command::RunRbp ? Algorithm::RBP : Algorithm::GAMP;
      art.runs = run_instances(cfg, alg);
      art.averaged = average_trajectories(art.runs);
      const std::string prefix = to_string(alg);
      for (int k = 0; k < cfg.instances; ++k) {
        Metadata m = meta;
        m.emplace_back("instance_seed", std::to_string(instance_seed(cfg, k)));
        m.emplace_back("damping_effective", format_number(cfg.effective_damping(alg)));
        emit(fmt::format("{}_instance_{}.csv", prefix, k),
             [&](std::ostream& os) { write_trajectory_csv(os, art.runs[k], m); });
      }
      if (cfg.instances > 1) {
        emit(prefix + "_average.csv", [&](std::ostream& os) { write_averaged_csv(os, art.averaged, meta); });
      }
      break;
    }
    case Command::RunSe: {
      const SEState s0 = scheme_start(cfg);
      SEOptions so;
      so.max_t = cfg.max_t;
      so.conv_tol = cfg.conv_tol;
      so.damping = cfg.damping > 0.0 ? cfg.damping : 1.0;
      art.se = run_se(s0.m, s0.q, s0.Q, cfg.make_se_model(), so);
      art.runs = {*art.se};
      emit("se.csv", [&](std::ostream& os) { write_trajectory_csv(os, *art.se, meta); });
      break;
    }
    case Command::SolveEos: {
      const ModelFamily family = cfg.make_family();
      const double alpha = replica_alpha(cfg);
      const double lambda = replica_lambda(cfg);
      art.eos.push_back({alpha, lambda, solve_eos(family, alpha, lambda, replica_options(cfg))});
      Metadata m = meta;
      m.emplace_back("family", to_string(family));
      m.emplace_back("free_energy_convention", "minimized; ising omits the constant -ln2");
      emit("eos.csv", [&](std::ostream& os) { write_eos_csv(os, art.eos, m); });
      break;
    }
    case Command::PhaseDiagram: {
      if (cfg.channel == "additive" && cfg.delta != 1.0) {
        throw ConfigError("model.delta", "phase-diagram works at unit noise; rescale lambda by 1/Delta instead");
      }
      const ModelFamily family = cfg.make_family();
      art.diagram = trace_phase_diagram(family, cfg.alpha_grid.values(), cfg.lambda_grid.values(),
                                        replica_options(cfg), cfg.jobs);
      Metadata m = meta;
      m.emplace_back("family", to_string(family));
      emit("phase.csv", [&](std::ostream& os) {
        write_metadata(os, m);
        write_phase_csv(os, *art.diagram);
      });
      emit("lines.csv", [&](std::ostream& os) {
        write_metadata(os, m);
        write_lines_csv(os, *art.diagram);
      });
      break;
    }
    case Command::Compare: {
      const Algorithm alg = cfg.compare_algorithm;
      art.runs = run_instances(cfg, alg);
      art.averaged = average_trajectories(art.runs);
      // SE starts at the scheme's nominal overlaps and uses the message-passing damping.
      const SEState s0 = scheme_start(cfg);
      SEOptions so;
      so.max_t = std::max<int>(1, static_cast<int>(art.averaged.size()) - 1);
      so.conv_tol = 0.0;
      so.damping = cfg.effective_damping(alg);
      art.se = run_se(s0.m, s0.q, s0.Q, cfg.make_se_model(), so);
      art.compare = join_compare(art.averaged, *art.se);
      Metadata m = meta;
      m.emplace_back("damping_effective", format_number(so.damping));
      m.emplace_back("se_start", fmt::format("{},{},{}", format_number(s0.m), format_number(s0.q),
                                             format_number(s0.Q)));
      emit("compare.csv", [&](std::ostream& os) { write_compare_csv(os, art.compare, m); });
      break;
    }
  }
  return art;
}

std::string emit_report(const Artifacts& art) {
  std::ostringstream os;
  os << "command " << to_string(art.command) << '\n';
  if (!art.runs.empty()) {
    std::size_t converged = 0;
    for (const auto& r : art.runs) converged += r.converged ? 1 : 0;
    os << "converged " << converged << '/' << art.runs.size() << '\n';
    for (std::size_t k = 0; k < art.runs.size(); ++k) {
      const auto& r = art.runs[k];
      if (r.diverged) {
        os << "instance " << k << " diverged at step " << r.diverged_step;
        if (!r.diagnostic.empty()) os << " (" << r.diagnostic << ')';
        os << '\n';
      }
    }
    if (!art.averaged.empty()) {
      const auto& last = art.averaged.back();
      os << fmt::format("final t={} m={} q={} Q={}\n", last.t, format_number(last.m), format_number(last.q),
                        format_number(last.Q));
    } else if (!art.runs.front().records.empty()) {
      const auto& last = art.runs.front().records.back();
      os << fmt::format("final t={} m={} q={} Q={}\n", last.t, format_number(last.m), format_number(last.q),
                        format_number(last.Q));
    }
  }
  if (!art.compare.empty()) {
    const auto [worst, step] = max_deviation(art.compare);
    const auto& last = art.compare.back();
    os << fmt::format("state evolution final m={}\n", format_number(last.m_se));
    os << fmt::format("max |m_amp - m_se| = {} at step {}\n", format_number(worst), step);
  }
  for (const auto& row : art.eos) {
    os << fmt::format("alpha={} lambda={}\n", format_number(row.alpha), format_number(row.lambda));
    for (std::size_t k = 0; k < row.branches.solutions.size(); ++k) {
      const auto& s = row.branches.solutions[k];
      os << fmt::format("  {} m={} f={} {}{}\n", to_string(s.kind), format_number(s.m), format_number(s.free_energy),
                        s.stable ? "stable" : "unstable", k == row.branches.dominant ? " dominant" : "");
    }
  }
  if (art.diagram) {
    os << "phase points " << art.diagram->points.size() << '\n';
    auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string("-"); };
    constexpr std::size_t kMaxLines = 12;
    const auto& lines = art.diagram->lines;
    for (std::size_t k = 0; k < std::min(lines.size(), kMaxLines); ++k) {
      const auto& l = lines[k];
      os << fmt::format("alpha={} lambda_star={} lambda_d={} lambda_c={}\n", format_number(l.alpha),
                        opt(l.lambda_star), opt(l.lambda_d), opt(l.lambda_c));
    }
    if (lines.size() > kMaxLines) os << "... " << lines.size() - kMaxLines << " more alpha values\n";
  }
  if (!art.files.empty()) {
    os << "wrote " << art.files.size() << " file(s) to " << art.files.front().parent_path().string() << '\n';
  }
  return os.str();
}

}  // namespace densefactor::cli
