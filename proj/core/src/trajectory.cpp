#include "densefactor/trajectory.hpp"

#include <fmt/format.h>

#include <ostream>

namespace densefactor {

std::string format_number(double x) { return fmt::format("{:.12g}", x == 0.0 ? 0.0 : x); }

void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [key, value] : meta) os << "# " << key << '=' << value << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta) {
  write_metadata(os, meta);
  os << "# converged=" << (traj.converged ? 1 : 0) << '\n';
  os << "# diverged=" << (traj.diverged ? 1 : 0) << '\n';
  if (traj.diverged) os << "# diverged_step=" << traj.diverged_step << '\n';
  os << "t,m,q,Q,D,mse_in,mse_out\n";
  for (const auto& r : traj.records) {
    os << r.t << ',' << format_number(r.m) << ',' << format_number(r.q) << ',' << format_number(r.Q)
       << ',' << format_number(r.D) << ',' << format_number(r.mse_in) << ','
       << format_number(r.mse_out) << '\n';
  }
}

}  // namespace densefactor
