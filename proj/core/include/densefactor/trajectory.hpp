#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace densefactor {

struct TrajectoryRecord {
  int t = 0;
  double m = 0.0;
  double q = 0.0;
  double Q = 0.0;
  double D = 0.0;
  double mse_in = 0.0;
  double mse_out = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  bool converged = false;
  bool diverged = false;
  int diverged_step = -1;
  int steps = 0;
  std::size_t clamped = 0;  // variance floors hit
  std::string diagnostic;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

// 12 significant digits, locale independent.
std::string format_number(double x);

// "# key=value" preamble then t,m,q,Q,D,mse_in,mse_out rows.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta);

void write_metadata(std::ostream& os, const Metadata& meta);

}  // namespace densefactor
