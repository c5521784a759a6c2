// bswtv: degrade / restore / evaluate / sweep front end.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 solver or
// domain error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bswtv/error.hpp"
#include "bswtv/experiment.hpp"
#include "bswtv/metrics.hpp"
#include "bswtv/pgm.hpp"

namespace fs = std::filesystem;
using bswtv::Json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolver = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> peak;
  std::optional<std::string> output;
  bool dump_phi = false;
  bool no_timing = false;
};

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw bswtv::IoError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw bswtv::ConfigError(path + ": " + e.what());
  }
}

std::string degrade_from(Json j, bswtv::Task task, const Flags& f, const std::string& fallback_dir) {
  if (j.contains("task")) {
    if (!j.at("task").is_string() || j.at("task").get<std::string>() != bswtv::to_string(task)) {
      throw bswtv::ConfigError("config task does not match the command");
    }
    j.erase("task");
  }
  bswtv::DegradeConfig cfg = bswtv::degrade_config_from_json(j, task);
  if (!j.contains("output_dir")) cfg.output_dir = fallback_dir;
  if (f.seed) cfg.seed = *f.seed;
  return bswtv::run_degrade(cfg);
}

// Restore configs may carry a "degrade" block instead of a manifest path; the
// data set is then generated into <output_dir>/data first.
Json resolve_manifest(Json j, bswtv::Task task, const Flags& f) {
  if (f.output) j["output_dir"] = *f.output;
  if (j.contains("degrade")) {
    if (j.contains("manifest")) throw bswtv::ConfigError("give either \"manifest\" or \"degrade\"");
    const std::string out = j.value("output_dir", std::string("."));
    j["manifest"] = degrade_from(j.at("degrade"), task, f, (fs::path(out) / "data").string());
    j.erase("degrade");
  }
  return j;
}

void apply_flags(bswtv::RestoreConfig& c, const Flags& f) {
  if (f.peak) c.peak = *f.peak;
  if (f.dump_phi) c.dump_phi = true;
  if (f.no_timing) c.timing = false;
}

void print_quality(const bswtv::RestoreOutcome& out) {
  std::printf("iterations %zu%s\n", out.trace.size(), out.stopped_early ? " (early stop)" : "");
  if (out.quality) {
    std::printf("psnr %.4f dB  ssim %.4f\n", out.quality->psnr_db, out.quality->ssim);
  }
}

int run_restore_cmd(bswtv::Task task, const Flags& f) {
  Json j = load_config(f.config);
  if (f.config.empty()) throw bswtv::ConfigError("--config is required");
  std::string task_name;
  if (j.contains("task")) {
    task_name = j.at("task").get<std::string>();
    if (task_name != bswtv::to_string(task)) throw bswtv::ConfigError("config task does not match");
    j.erase("task");
  }
  j = resolve_manifest(std::move(j), task, f);
  bswtv::RestoreConfig cfg = bswtv::restore_config_from_json(j);
  cfg.expected_task = task;
  apply_flags(cfg, f);
  print_quality(bswtv::run_restore(cfg));
  return 0;
}

int run_sweep_cmd(const Flags& f) {
  Json j = load_config(f.config);
  if (f.config.empty()) throw bswtv::ConfigError("--config is required");
  bswtv::Task task = bswtv::Task::sr;
  if (j.contains("task")) {
    const std::string t = j.at("task").get<std::string>();
    if (t == "denoise") {
      task = bswtv::Task::denoise;
    } else if (t != "sr") {
      throw bswtv::ConfigError("unknown task \"" + t + "\"");
    }
    j.erase("task");
  }
  j = resolve_manifest(std::move(j), task, f);
  bswtv::SweepConfig cfg = bswtv::sweep_config_from_json(j);
  cfg.base.expected_task = task;
  apply_flags(cfg.base, f);
  for (const auto& row : bswtv::run_sweep(cfg)) {
    std::printf("%s=%s: ", cfg.param.c_str(), row.value.c_str());
    print_quality(row.outcome);
  }
  std::printf("summary: %s\n", (fs::path(cfg.base.output_dir) / "summary.csv").string().c_str());
  return 0;
}

int run_eval_cmd(const std::string& ref, const std::string& test, double scale, const Flags& f) {
  bswtv::GrayImage a = bswtv::read_pgm(ref);
  bswtv::GrayImage b = bswtv::read_pgm(test);
  a *= 1.0 / scale;
  b *= 1.0 / scale;
  if (a.shape() != b.shape()) throw bswtv::ConfigError("images differ in size");
  const auto q = bswtv::evaluate_quality(a, b, f.peak.value_or(255.0));
  Json out{{"mse", q.mse}, {"ssim", q.ssim}, {"identical", q.identical}};
  out["psnr_db"] = q.identical ? Json("inf") : Json(q.psnr_db);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-frame super-resolution and denoising under mixed Poisson-Gaussian noise"};
  app.require_subcommand(1);
  Flags f;
  std::string ref;
  std::string test;
  double scale = 1.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON configuration file");
    sub->add_option("--seed", f.seed, "Noise seed (overrides the config)");
    sub->add_option("-o,--output", f.output, "Output directory (overrides the config)");
  };
  auto add_restore = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_flag("--dump-phi", f.dump_phi, "Write the weighting map and shrink field per iteration");
    sub->add_option("--peak", f.peak, "PSNR/SSIM peak value (default 255)");
    sub->add_flag("--no-timing", f.no_timing, "Write wall_ms = 0 for reproducible traces");
  };

  CLI::App* degrade = app.add_subcommand("degrade", "Simulate LR frames and write a manifest");
  std::string degrade_task = "sr";
  add_common(degrade);
  degrade->add_option("--task", degrade_task, "sr or denoise")
      ->check(CLI::IsMember({"sr", "denoise"}));
  CLI::App* denoise = app.add_subcommand("denoise", "Restore a single noisy frame");
  add_restore(denoise);
  CLI::App* sr = app.add_subcommand("sr", "Multi-frame super-resolution");
  add_restore(sr);
  CLI::App* sweep = app.add_subcommand("sweep", "Restore once per value of one parameter");
  add_restore(sweep);
  CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM of a test image against a reference");
  eval->add_option("--ref", ref, "Reference PGM")->required();
  eval->add_option("--test", test, "Test PGM")->required();
  eval->add_option("--scale", scale, "Divide pixel values by this before comparing")
      ->check(CLI::PositiveNumber);
  eval->add_option("--peak", f.peak, "Peak value (default 255)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*degrade) {
      Json j = load_config(f.config);
      if (j.contains("task")) degrade_task = j.at("task").get<std::string>();
      const auto task = degrade_task == "denoise" ? bswtv::Task::denoise : bswtv::Task::sr;
      if (f.output) j["output_dir"] = *f.output;
      std::printf("manifest: %s\n", degrade_from(j, task, f, ".").c_str());
      return 0;
    }
    if (*denoise) return run_restore_cmd(bswtv::Task::denoise, f);
    if (*sr) return run_restore_cmd(bswtv::Task::sr, f);
    if (*sweep) return run_sweep_cmd(f);
    if (*eval) return run_eval_cmd(ref, test, scale, f);
  } catch (const bswtv::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bswtv::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const bswtv::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const bswtv::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
