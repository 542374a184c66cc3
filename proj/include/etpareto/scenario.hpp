#pragma once

// Problem definition: plant, initial belief, waypoints, axis-aligned
// obstacles and target, threshold set, costs and tolerances. Scenarios are
// stored as JSON documents with matrices written as lists of rows.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpareto/errors.hpp"
#include "etpareto/et_filter.hpp"
#include "etpareto/gaussian.hpp"
#include "etpareto/linalg.hpp"

namespace etpareto {

using Json = nlohmann::ordered_json;

// Closed box lo <= x <= hi.
struct HyperRect {
  Vec lo;
  Vec hi;

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  bool intersects(const HyperRect& o) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i] < o.lo[i] || o.hi[i] < lo[i]) return false;
    return true;
  }

  friend bool operator==(const HyperRect&, const HyperRect&) = default;
};

struct TerminationParams {
  double eps_x = 0.05;
  std::size_t k_max = 400;
  friend bool operator==(const TerminationParams&, const TerminationParams&) = default;
};

// Enforced-convergence switching: ET -> KF within eps_kf of the waypoint,
// then hold until ||P - P_KF||_max <= eps_p.
struct Method1Params {
  double eps_kf = 0.15;
  double eps_p = 1e-5;
  friend bool operator==(const Method1Params&, const Method1Params&) = default;
};

struct ControlSettings {
  Vec u_max;                   // per input component
  std::optional<Matrix> gain;  // p x n; LQR with identity weights when absent
  friend bool operator==(const ControlSettings&, const ControlSettings&) = default;
};

struct Scenario {
  std::string name;
  FilterParams params;
  GaussianBelief initial;
  std::vector<Vec> waypoints;
  std::vector<HyperRect> obstacles;
  HyperRect target;
  Vec deltas;
  double comm_cost = 1.0;
  TerminationParams term;
  Method1Params method1;
  ControlSettings control;

  std::size_t dim() const noexcept { return params.state_dim(); }
  std::size_t segments() const noexcept { return waypoints.empty() ? 0 : waypoints.size() - 1; }
};

inline bool operator==(const FilterParams& a, const FilterParams& b) {
  return a.F == b.F && a.G == b.G && a.H == b.H && a.Q == b.Q && a.R == b.R;
}
inline bool operator==(const GaussianBelief& a, const GaussianBelief& b) {
  return a.mean == b.mean && a.cov == b.cov;
}
inline bool operator==(const Scenario& a, const Scenario& b) {
  return a.name == b.name && a.params == b.params && a.initial == b.initial && a.waypoints == b.waypoints &&
         a.obstacles == b.obstacles && a.target == b.target && a.deltas == b.deltas &&
         a.comm_cost == b.comm_cost && a.term == b.term && a.method1 == b.method1 && a.control == b.control;
}

enum class PointKind { Free, Collision, Target };

struct PointClass {
  PointKind kind = PointKind::Free;
  std::size_t obstacle = 0;  // valid for Collision
};

/// Collision wins over target; overlapping obstacles report the lowest index.
inline PointClass classify_point(const Scenario& s, std::span<const double> x) {
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    if (s.obstacles[i].contains(x)) return {PointKind::Collision, i};
  if (s.target.contains(x)) return {PointKind::Target, 0};
  return {PointKind::Free, 0};
}

namespace detail {

inline void require_spd(const Matrix& m, const std::string& name) {
  if (!m.square() || m.empty()) throw ValidationError(name + " must be a non-empty square matrix");
  if (!m.finite()) throw ValidationError(name + " has non-finite entries");
  if (m.asymmetry() > 1e-9 * std::max(1.0, m.max_abs())) throw ValidationError(name + " is not symmetric");
  const double lam = min_eigenvalue(m);
  if (!(lam > 0.0)) {
    std::ostringstream os;
    os << name << " is not positive definite (min eigenvalue " << lam << ")";
    throw ValidationError(os.str());
  }
}

inline void require_box(const HyperRect& r, std::size_t n, const std::string& name) {
  if (r.lo.size() != n || r.hi.size() != n) throw ValidationError(name + " has wrong dimension");
  for (std::size_t i = 0; i < n; ++i)
    if (!(r.lo[i] < r.hi[i])) throw ValidationError(name + " must satisfy lo < hi componentwise");
}

}  // namespace detail

/// Checks every scenario invariant; throws ValidationError naming the first violation.
inline void validate(const Scenario& s) {
  try {
    s.params.check_dimensions();
  } catch (const InputError& e) {
    throw ValidationError(e.what());
  }
  const std::size_t n = s.dim();
  detail::require_spd(s.params.Q, "Q");
  detail::require_spd(s.params.R, "R");
  detail::require_spd(s.initial.cov, "P0");
  if (s.initial.mean.size() != n) throw ValidationError("x0_mean has wrong dimension");
  if (s.initial.cov.rows() != n) throw ValidationError("P0 has wrong dimension");
  if (s.waypoints.size() < 2) throw ValidationError("waypoints: need a start and at least one more waypoint");
  for (std::size_t i = 0; i < s.waypoints.size(); ++i)
    if (s.waypoints[i].size() != n) throw ValidationError("waypoints[" + std::to_string(i) + "] has wrong dimension");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    detail::require_box(s.obstacles[i], n, "obstacles[" + std::to_string(i) + "]");
  detail::require_box(s.target, n, "target");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    if (s.target.intersects(s.obstacles[i]))
      throw ValidationError("target intersects obstacles[" + std::to_string(i) + "]");
  if (s.deltas.empty()) throw ValidationError("deltas must be nonempty");
  for (std::size_t i = 0; i < s.deltas.size(); ++i) {
    if (!std::isfinite(s.deltas[i]) || s.deltas[i] <= 0.0) throw ValidationError("deltas must be positive and finite");
    if (i > 0 && !(s.deltas[i] > s.deltas[i - 1])) throw ValidationError("deltas must be strictly increasing");
  }
  if (!(s.comm_cost >= 0.0)) throw ValidationError("comm_cost must be >= 0");
  if (!(s.term.eps_x > 0.0)) throw ValidationError("termination.eps_x must be > 0");
  if (s.term.k_max < 1) throw ValidationError("termination.k_max must be >= 1");
  if (!(s.method1.eps_kf > 0.0)) throw ValidationError("method1.eps_kf must be > 0");
  if (!(s.method1.eps_p > 0.0)) throw ValidationError("method1.eps_p must be > 0");
  if (s.control.u_max.size() != s.params.input_dim()) throw ValidationError("control.u_max must have one bound per input");
  for (double b : s.control.u_max)
    if (!(b > 0.0)) throw ValidationError("control.u_max must be > 0");
  if (s.control.gain && (s.control.gain->rows() != s.params.input_dim() || s.control.gain->cols() != n))
    throw ValidationError("control.gain must be p x n");
}

// --- JSON ------------------------------------------------------------------

inline Json matrix_to_json(const Matrix& m) { return Json(m.to_rows()); }

inline Json box_to_json(const HyperRect& r) { return Json{{"lo", r.lo}, {"hi", r.hi}}; }

inline Json to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["system"] = Json{{"F", matrix_to_json(s.params.F)},
                     {"G", matrix_to_json(s.params.G)},
                     {"H", matrix_to_json(s.params.H)},
                     {"Q", matrix_to_json(s.params.Q)},
                     {"R", matrix_to_json(s.params.R)}};
  j["initial"] = Json{{"mean", s.initial.mean}, {"cov", matrix_to_json(s.initial.cov)}};
  j["waypoints"] = s.waypoints;
  Json obs = Json::array();
  for (const auto& o : s.obstacles) obs.push_back(box_to_json(o));
  j["obstacles"] = obs;
  j["target"] = box_to_json(s.target);
  j["deltas"] = s.deltas;
  j["comm_cost"] = s.comm_cost;
  j["termination"] = Json{{"eps_x", s.term.eps_x}, {"k_max", s.term.k_max}};
  j["method1"] = Json{{"eps_kf", s.method1.eps_kf}, {"eps_p", s.method1.eps_p}};
  Json control{{"u_max", s.control.u_max}};
  if (s.control.gain) control["gain"] = matrix_to_json(*s.control.gain);
  j["control"] = control;
  return j;
}

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError("missing field '" + path + key + "'");
  return j.at(key);
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError("field '" + path + "' must be a number");
  return j.get<double>();
}

inline Vec as_vec(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError("field '" + path + "' must be an array of numbers");
  Vec v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline Matrix as_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError("field '" + path + "' must be a non-empty list of rows");
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(as_vec(j[i], path + "[" + std::to_string(i) + "]"));
  for (const auto& r : rows)
    if (r.size() != rows.front().size() || r.empty()) throw ParseError("field '" + path + "' has ragged rows");
  return Matrix::from_rows(rows);
}

inline HyperRect as_box(const Json& j, const std::string& path) {
  return {as_vec(field(j, "lo", path + "."), path + ".lo"), as_vec(field(j, "hi", path + "."), path + ".hi")};
}

}  // namespace detail

/// Builds a Scenario from JSON without validating invariants.
inline Scenario scenario_from_json(const Json& j) {
  using namespace detail;
  Scenario s;
  s.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : std::string("scenario");
  const Json& sys = field(j, "system", "");
  s.params.F = as_matrix(field(sys, "F", "system."), "system.F");
  s.params.G = as_matrix(field(sys, "G", "system."), "system.G");
  s.params.H = as_matrix(field(sys, "H", "system."), "system.H");
  s.params.Q = as_matrix(field(sys, "Q", "system."), "system.Q");
  s.params.R = as_matrix(field(sys, "R", "system."), "system.R");
  const Json& init = field(j, "initial", "");
  s.initial.mean = as_vec(field(init, "mean", "initial."), "initial.mean");
  s.initial.cov = as_matrix(field(init, "cov", "initial."), "initial.cov");
  const Json& wps = field(j, "waypoints", "");
  if (!wps.is_array()) throw ParseError("field 'waypoints' must be a list");
  for (std::size_t i = 0; i < wps.size(); ++i) s.waypoints.push_back(as_vec(wps[i], "waypoints[" + std::to_string(i) + "]"));
  if (j.contains("obstacles")) {
    const Json& obs = j["obstacles"];
    if (!obs.is_array()) throw ParseError("field 'obstacles' must be a list");
    for (std::size_t i = 0; i < obs.size(); ++i) s.obstacles.push_back(as_box(obs[i], "obstacles[" + std::to_string(i) + "]"));
  }
  s.target = as_box(field(j, "target", ""), "target");
  s.deltas = as_vec(field(j, "deltas", ""), "deltas");
  if (j.contains("comm_cost")) s.comm_cost = as_number(j["comm_cost"], "comm_cost");
  if (j.contains("termination")) {
    const Json& t = j["termination"];
    if (t.contains("eps_x")) s.term.eps_x = as_number(t["eps_x"], "termination.eps_x");
    if (t.contains("k_max")) {
      if (!t["k_max"].is_number_unsigned()) throw ParseError("field 'termination.k_max' must be a positive integer");
      s.term.k_max = t["k_max"].get<std::size_t>();
    }
  }
  if (j.contains("method1")) {
    const Json& m = j["method1"];
    if (m.contains("eps_kf")) s.method1.eps_kf = as_number(m["eps_kf"], "method1.eps_kf");
    if (m.contains("eps_p")) s.method1.eps_p = as_number(m["eps_p"], "method1.eps_p");
  } else {
    s.method1.eps_kf = 3.0 * s.term.eps_x;
  }
  s.control.u_max = Vec(s.params.G.cols(), 0.5);
  if (j.contains("control")) {
    const Json& c = j["control"];
    if (c.contains("u_max")) {
      if (c["u_max"].is_number())
        s.control.u_max = Vec(s.params.G.cols(), c["u_max"].get<double>());
      else
        s.control.u_max = as_vec(c["u_max"], "control.u_max");
    }
    if (c.contains("gain")) s.control.gain = as_matrix(c["gain"], "control.gain");
  }
  return s;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Reads, parses and validates a scenario file.
inline Scenario load_scenario(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  Scenario s;
  try {
    s = scenario_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  validate(s);
  return s;
}

inline void save_scenario(const std::filesystem::path& path, const Scenario& s) {
  write_text_file(path, to_json(s).dump(2) + "\n");
}

}  // namespace etpareto
