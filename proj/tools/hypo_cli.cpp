#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hypo/experiments.hpp"

using namespace hypo;

namespace {

constexpr const char* kDefaultConfig = R"({
  "experiment": "kolmogorov-default",
  "structure": {"dims": [1, 1], "blocks": [[[1.0]]]},
  "profile": {"breakpoints": [], "values": [[[1.0]]], "mu": 1.0}
})";

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<int> paths;
  std::optional<std::string> grid;
  std::optional<double> mesh;
  std::optional<int> permutations;
  std::optional<int> cases;
  std::optional<double> tamper;
  std::optional<std::string> expect;
  std::optional<double> p;
  std::optional<int> jmax;
  std::string example = "zy";
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "experiment config (JSON)");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--workers", o.workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  sub->add_option("--paths", o.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  sub->add_option("--grid", o.grid, "time grid a:h:b");
  sub->add_option("--mesh", o.mesh, "Euler mesh");
  sub->add_option("--permutations", o.permutations, "permutations for two-sample tests");
  sub->add_option("--cases", o.cases, "randomized cases");
  sub->add_option("--tamper", o.tamper, "shift added to drift component 0");
  sub->add_option("--expect", o.expect, "accept or reject")->check(CLI::IsMember({"accept", "reject"}));
}

json load_json(const std::string& path) {
  if (path.empty()) return json::parse(kDefaultConfig);
  std::ifstream in(path);
  if (!in) io::config_error("--config", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    io::config_error("--config", std::string("invalid JSON: ") + e.what());
  }
}

/// Flags override config keys; HYPO_WORKERS sets the worker count when
/// --workers is absent.
ExperimentConfig resolve(const Overrides& o) {
  json j = load_json(o.config);
  if (!j.is_object()) io::config_error("", "config must be a JSON object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output"]["dir"] = *o.out;
  if (o.paths) j["budget"]["paths"] = *o.paths;
  if (o.mesh) j["budget"]["mesh"] = *o.mesh;
  if (o.permutations) j["budget"]["permutations"] = *o.permutations;
  if (o.cases) j["budget"]["cases"] = *o.cases;
  if (o.grid) {
    j["grid"] = *o.grid;
    j.erase("check_times");
  }
  if (o.expect) j["expect"] = *o.expect;
  if (o.p) j["p"] = *o.p;
  if (o.jmax) j["jmax"] = *o.jmax;
  if (o.workers) {
    j["workers"] = *o.workers;
  } else if (const char* env = std::getenv("HYPO_WORKERS")) {
    try {
      j["workers"] = std::stoi(env);
    } catch (const std::logic_error&) {
      io::config_error("HYPO_WORKERS", "expected an integer");
    }
  }
  ExperimentConfig cfg = parse_config(j);
  if (o.tamper) cfg.drift_shift(0) += *o.tamper;
  return cfg;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int emit(const ExperimentConfig& cfg, const Report& report) {
  json out = {{"generated_at", utc_now()}};
  const json body = report.to_json(cfg);
  for (const auto& [key, value] : body.items()) out[key] = value;
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / (report.subcommand + ".json");
  std::ofstream file(path, std::ios::trunc);
  file << out.dump(2) << '\n';
  for (const auto& c : report.contracts) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tolerance " << c.tolerance << ")\n";
  }
  std::cout << "report: " << path.string() << '\n';
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degenerate diffusion experiments: group, kernel, Green's operator, sampler and transform checks"};
  app.require_subcommand(1);
  Overrides o;
  std::map<std::string, std::function<Report(const ExperimentConfig&)>> runners = {
      {"group-check", run_group_check},
      {"density-check", [](const ExperimentConfig& c) { return run_density_check(c); }},
      {"sample", run_sample},
      {"euler", run_euler},
      {"mg-residual", run_mg_residual},
      {"green-compare", run_green_compare},
      {"lp-estimate", run_lp_estimate},
      {"sup-bound", run_sup_bound},
      {"uniqueness-compare", run_uniqueness_compare},
      {"transform-check", [&o](const ExperimentConfig& c) { return run_transform_check(c, o.example); }},
      {"localize", run_localize},
  };
  const std::map<std::string, std::string> help = {
      {"group-check", "group axioms, dilations and homogeneous norm"},
      {"density-check", "normalization, Chapman-Kolmogorov, backward residual, cancellation"},
      {"sample", "exact Gaussian ensemble (binary) and CSV summary"},
      {"euler", "Euler-Maruyama ensemble of the linear field"},
      {"mg-residual", "martingale-problem residual for a bump test function"},
      {"green-compare", "Monte Carlo Green functional against quadrature, plus the bound table"},
      {"lp-estimate", "L^p ratios of truncated singular operators"},
      {"sup-bound", "sup of G^T f against T^(1 - dbar/2p) ||f||_p"},
      {"uniqueness-compare", "two-sample law distance, exact against Euler"},
      {"transform-check", "Z = X + Y reduction or pushforward consistency"},
      {"localize", "stopping-time statistics under a radius function"},
  };
  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    add_common(sub, o);
    if (name == "lp-estimate" || name == "sup-bound" || name == "green-compare") {
      sub->add_option("--p", o.p, "L^p exponent");
    }
    if (name == "lp-estimate") sub->add_option("--jmax", o.jmax, "largest truncation index");
    if (name == "transform-check") {
      sub->add_option("--example", o.example, "zy or pushforward")->check(CLI::IsMember({"zy", "pushforward"}));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = resolve(o);
    return emit(cfg, runners.at(name)(cfg));
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  }
}
