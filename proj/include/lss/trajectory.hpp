#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace lss {

struct TrajectoryRow {
  long n = 0;
  Eigen::VectorXd z;
  std::optional<Eigen::VectorXd> v;
  std::optional<double> omega_norm;
  std::optional<double> v_gap;  // ‖v - v*(z)‖ against a dense solve
};

struct Trajectory {
  std::string rule;
  std::string schedule;
  std::uint64_t seed = 0;
  std::string game_hash;
  int dx = 0;
  int dy = 0;
  bool has_v = false;
  bool has_diagnostics = false;
  std::vector<TrajectoryRow> rows;

  bool diverged = false;
  long diverged_at = -1;
  std::string divergence_reason;

  const TrajectoryRow& initial() const { return rows.front(); }
  const TrajectoryRow& terminal() const { return rows.back(); }
};

/// %.17g round-trips every double, so equal runs give equal bytes.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// n,z_0..z_{d-1}[,v_0..v_{d-1}][,omega_norm,v_gap]; a trailing
/// `# DIVERGED at n=...` line marks runs cut short by the guard.
inline void write_csv(std::ostream& out, const Trajectory& t) {
  const int d = t.dx + t.dy;
  out << "n";
  for (int i = 0; i < d; ++i) out << ",z_" << i;
  if (t.has_v)
    for (int i = 0; i < d; ++i) out << ",v_" << i;
  if (t.has_diagnostics) out << ",omega_norm,v_gap";
  out << '\n';
  for (const auto& r : t.rows) {
    out << r.n;
    for (int i = 0; i < d; ++i) out << ',' << format_real(r.z[i]);
    if (t.has_v)
      for (int i = 0; i < d; ++i) out << ',' << format_real(r.v ? (*r.v)[i] : 0.0);
    if (t.has_diagnostics) {
      out << ',' << (r.omega_norm ? format_real(*r.omega_norm) : "");
      out << ',' << (r.v_gap ? format_real(*r.v_gap) : "");
    }
    out << '\n';
  }
  if (t.diverged) out << "# DIVERGED at n=" << t.diverged_at << '\n';
}

inline std::string to_csv(const Trajectory& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// JSON mirror of the CSV with run metadata.
inline nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json j;
  j["rule"] = t.rule;
  j["schedule"] = t.schedule;
  j["seed"] = t.seed;
  j["game_hash"] = t.game_hash;
  j["dx"] = t.dx;
  j["dy"] = t.dy;
  j["diverged"] = t.diverged;
  if (t.diverged) {
    j["diverged_at"] = t.diverged_at;
    j["divergence_reason"] = t.divergence_reason;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row;
    row["n"] = r.n;
    row["z"] = to_json(r.z);
    if (r.v) row["v"] = to_json(*r.v);
    if (r.omega_norm) row["omega_norm"] = *r.omega_norm;
    if (r.v_gap) row["v_gap"] = *r.v_gap;
    rows.push_back(std::move(row));
  }
  j["states"] = std::move(rows);
  return j;
}

}  // namespace lss
