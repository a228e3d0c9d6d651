#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypo/error.hpp"
#include "hypo/group.hpp"
#include "hypo/kernel.hpp"
#include "hypo/quadrature.hpp"
#include "hypo/transform.hpp"

namespace hypo {

using json = nlohmann::ordered_json;

namespace io {

[[noreturn]] inline void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "field '" + field + "': " + what);
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline std::string join(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

inline const json& at(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) config_error(path, "expected an object");
  if (!j.contains(key)) config_error(join(path, key), "missing");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "not finite");
  return v;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  return j.get<int>();
}

inline std::uint64_t unsigned64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    config_error(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

inline Vec vec(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], join(path, i));
  return v;
}

inline Mat mat(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) config_error(path, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) config_error(join(path, 0), "expected a nonempty row");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) config_error(join(path, r), "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], join(join(path, r), c));
    }
  }
  return m;
}

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

/// Rethrows library validation failures as ConfigError naming the field.
template <class F>
auto as_config(const std::string& path, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(path, e.what());
  }
}

}  // namespace io

// ---------------------------------------------------------------------------
// Structural matrix: {"dims": [d0, ..., dn], "blocks": [B1, ..., Bn]}

inline json structure_to_json(const StructuralMatrix& sm) {
  json blocks = json::array();
  for (int i = 1; i <= sm.depth(); ++i) blocks.push_back(io::to_json(sm.block(i)));
  return {{"dims", sm.block_dims()}, {"blocks", blocks}};
}

inline StructuralMatrix structure_from_json(const json& j, const std::string& path = "structure") {
  const json& dj = io::at(j, path, "dims");
  const std::string dims_path = io::join(path, "dims");
  if (!dj.is_array() || dj.size() < 2) io::config_error(dims_path, "expected at least two block sizes");
  std::vector<int> dims;
  for (std::size_t i = 0; i < dj.size(); ++i) {
    const int v = io::integer(dj[i], io::join(dims_path, i));
    if (v < 1) io::config_error(io::join(dims_path, i), "block sizes must be positive");
    if (i > 0 && v > dims.back()) io::config_error(io::join(dims_path, i), "block sizes must be nonincreasing");
    dims.push_back(v);
  }
  const json& bj = io::at(j, path, "blocks");
  const std::string blocks_path = io::join(path, "blocks");
  if (!bj.is_array() || bj.size() + 1 != dims.size()) {
    io::config_error(blocks_path, "need one block per consecutive pair of dims");
  }
  std::vector<Mat> blocks;
  for (std::size_t i = 0; i < bj.size(); ++i) {
    Mat b = io::mat(bj[i], io::join(blocks_path, i));
    if (b.rows() != dims[i + 1] || b.cols() != dims[i]) {
      io::config_error(io::join(blocks_path, i), "shape must be dims[i+1] x dims[i]");
    }
    blocks.push_back(std::move(b));
  }
  return io::as_config(path, [&] { return structure_from_blocks(dims, blocks); });
}

// ---------------------------------------------------------------------------
// Covariance profile: {"breakpoints": [..], "values": [C0, C1, ..], "mu": m}

inline json profile_to_json(const CovarianceProfile& c) {
  json values = json::array();
  for (const Mat& v : c.values()) values.push_back(io::to_json(v));
  return {{"breakpoints", c.breakpoints()}, {"values", values}, {"mu", c.mu()}};
}

inline CovarianceProfile profile_from_json(const json& j, const std::string& path = "profile") {
  std::vector<double> bps;
  if (j.is_object() && j.contains("breakpoints")) {
    const Vec b = io::vec(j.at("breakpoints"), io::join(path, "breakpoints"));
    bps.assign(b.data(), b.data() + b.size());
  }
  const json& vj = io::at(j, path, "values");
  if (!vj.is_array() || vj.empty()) io::config_error(io::join(path, "values"), "expected a nonempty array");
  std::vector<Mat> values;
  for (std::size_t i = 0; i < vj.size(); ++i) values.push_back(io::mat(vj[i], io::join(io::join(path, "values"), i)));
  const double mu = io::number(io::at(j, path, "mu"), io::join(path, "mu"));
  return io::as_config(path, [&] { return CovarianceProfile(bps, values, mu); });
}

// ---------------------------------------------------------------------------
// Quadrature: {"scheme", "radius", "nodes", "time_nodes", "window", "window_panels", "focus": {"center", "cov"}}

inline QuadratureSpec quadrature_from_json(const json& j, int axes, const std::string& path = "quadrature") {
  QuadratureSpec spec = QuadratureSpec::uniform(axes, 6.0, 8, 8);
  if (j.is_null()) return spec;
  if (!j.is_object()) io::config_error(path, "expected an object");
  if (j.contains("scheme")) spec.scheme = io::string(j.at("scheme"), io::join(path, "scheme"));
  auto per_axis = [&](const char* key, auto convert, auto& target) {
    if (!j.contains(key)) return;
    const std::string p = io::join(path, key);
    const json& v = j.at(key);
    if (v.is_number()) {
      for (auto& t : target) t = convert(v, p);
      return;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != axes) io::config_error(p, "need one entry per axis");
    for (std::size_t i = 0; i < v.size(); ++i) target[i] = convert(v[i], io::join(p, i));
  };
  per_axis("radius", io::number, spec.radius);
  per_axis("nodes", io::integer, spec.nodes);
  if (j.contains("time_nodes")) spec.time_nodes = io::integer(j.at("time_nodes"), io::join(path, "time_nodes"));
  if (j.contains("window_panels")) {
    spec.window_panels = io::integer(j.at("window_panels"), io::join(path, "window_panels"));
  }
  if (j.contains("window")) {
    const Vec w = io::vec(j.at("window"), io::join(path, "window"));
    if (w.size() != 2) io::config_error(io::join(path, "window"), "expected [lo, hi]");
    spec.time_window = std::make_pair(w(0), w(1));
  }
  if (j.contains("focus")) {
    const std::string fp = io::join(path, "focus");
    const json& f = j.at("focus");
    spec.focus = std::make_pair(io::vec(io::at(f, fp, "center"), io::join(fp, "center")),
                                io::mat(io::at(f, fp, "cov"), io::join(fp, "cov")));
  }
  io::as_config(path, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

inline json quadrature_to_json(const QuadratureSpec& spec) {
  json out = {{"scheme", spec.scheme},         {"radius", spec.radius}, {"nodes", spec.nodes},
              {"time_nodes", spec.time_nodes}, {"window_panels", spec.window_panels}};
  if (spec.time_window) out["window"] = {spec.time_window->first, spec.time_window->second};
  if (spec.focus) out["focus"] = {{"center", io::to_json(spec.focus->first)}, {"cov", io::to_json(spec.focus->second)}};
  return out;
}

// ---------------------------------------------------------------------------
// Transform: {"catalog", "kappa", "A0", "A1", "A2", "probe": {...}}

inline json transform_to_json(const Transform& tr) {
  const ProbeRegion& p = tr.probe();
  json probe = {{"t_lo", p.t_lo},
                {"t_hi", p.t_hi},
                {"half_width", p.half_width},
                {"points", p.points},
                {"seed", p.seed}};
  if (p.center.size() > 0) probe["center"] = io::to_json(p.center);
  return {{"d0", tr.d0()},
          {"d1", tr.d1()},
          {"catalog", tr.bsecond().name},
          {"kappa", tr.bsecond().kappa},
          {"A0", io::to_json(tr.a0())},
          {"A1", io::to_json(tr.a1())},
          {"A2", io::to_json(tr.a2())},
          {"probe", probe}};
}

inline Transform transform_from_json(const json& j, const std::string& path = "transform") {
  const std::string name = io::string(io::at(j, path, "catalog"), io::join(path, "catalog"));
  const double kappa = j.contains("kappa") ? io::number(j.at("kappa"), io::join(path, "kappa")) : 0.0;
  const Mat a0 = io::mat(io::at(j, path, "A0"), io::join(path, "A0"));
  const Mat a1 = io::mat(io::at(j, path, "A1"), io::join(path, "A1"));
  const Mat a2 = io::mat(io::at(j, path, "A2"), io::join(path, "A2"));
  ProbeRegion probe;
  if (j.contains("probe")) {
    const json& pj = j.at("probe");
    const std::string pp = io::join(path, "probe");
    if (pj.contains("t_lo")) probe.t_lo = io::number(pj.at("t_lo"), io::join(pp, "t_lo"));
    if (pj.contains("t_hi")) probe.t_hi = io::number(pj.at("t_hi"), io::join(pp, "t_hi"));
    if (pj.contains("half_width")) probe.half_width = io::number(pj.at("half_width"), io::join(pp, "half_width"));
    if (pj.contains("points")) probe.points = io::integer(pj.at("points"), io::join(pp, "points"));
    if (pj.contains("seed")) probe.seed = io::unsigned64(pj.at("seed"), io::join(pp, "seed"));
    if (pj.contains("center")) probe.center = io::vec(pj.at("center"), io::join(pp, "center"));
  }
  return io::as_config(path, [&] {
    if (j.contains("d0") && io::integer(j.at("d0"), io::join(path, "d0")) != a1.cols()) {
      io::config_error(io::join(path, "d0"), "disagrees with A1");
    }
    if (j.contains("d1") && io::integer(j.at("d1"), io::join(path, "d1")) != a1.rows()) {
      io::config_error(io::join(path, "d1"), "disagrees with A1");
    }
    return make_transform(catalog_bsecond(name, a0, a1, a2, kappa), a0, a1, a2, probe);
  });
}

// ---------------------------------------------------------------------------
// Grids and tables

/// "a:h:b" -> a, a + h, ..., b. (b - a) / h must be an integer.
inline std::vector<double> parse_grid(const std::string& text, const std::string& field = "grid") {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) io::config_error(field, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      io::config_error(field, "bad number '" + item + "'");
    }
  }
  if (parts.size() != 3) io::config_error(field, "expected a:h:b");
  const double a = parts[0], h = parts[1], b = parts[2];
  if (!(h > 0.0) || !(b >= a)) io::config_error(field, "need h > 0 and b >= a");
  const double steps = std::round((b - a) / h);
  if (std::abs(a + steps * h - b) > 1e-9 * std::max(1.0, std::abs(b))) {
    io::config_error(field, "(b - a) / h is not an integer");
  }
  std::vector<double> out;
  for (long i = 0; i <= static_cast<long>(steps); ++i) out.push_back(a + static_cast<double>(i) * h);
  out.back() = b;
  return out;
}

/// Rows (s, x..., t, y..., p) for every y in the tensor grid of `axes`.
inline void write_density_grid_csv(std::ostream& os, const TransitionKernel& k, const GroupPoint& p, double t,
                                   const std::vector<std::vector<double>>& axes) {
  const int d = k.dim();
  require(static_cast<int>(axes.size()) == d && p.x.size() == d, ErrorCode::DimensionMismatch, "grid dimension");
  os << "s";
  for (int i = 1; i <= d; ++i) os << ",x" << i;
  os << ",t";
  for (int i = 1; i <= d; ++i) os << ",y" << i;
  os << ",p\n";
  os.precision(17);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Vec y(d);
  while (true) {
    for (int i = 0; i < d; ++i) y(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    os << p.s;
    for (int i = 0; i < d; ++i) os << ',' << p.x(i);
    os << ',' << t;
    for (int i = 0; i < d; ++i) os << ',' << y(i);
    os << ',' << density(k, p, {t, y}) << '\n';
    int a = d - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == axes[static_cast<std::size_t>(a)].size()) {
      idx[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace hypo
