#pragma once

// Experiment plumbing shared by the command-line tool and the acceptance
// suite: JSON configuration, the degrade -> manifest -> restore pipeline,
// per-iteration CSV traces and parameter sweeps.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bswtv/admm.hpp"
#include "bswtv/degrade.hpp"
#include "bswtv/metrics.hpp"

namespace bswtv {

using Json = nlohmann::json;

enum class Task { denoise, sr };

std::string to_string(Task task);
std::string to_string(RegularizerKind kind);
std::string to_string(DataTerm term);

struct BlurSpec {
  double sigma = 1.0;
  int radius = 1;  // 3x3 support by default
};

struct DegradeConfig {
  Task task = Task::sr;
  std::string gt_path;       // empty: synthetic shapes target
  int synthetic_size = 64;
  double rescale_peak = 200.0;  // <= 0 keeps the input range
  int upscale = 2;
  std::vector<SubpixelOffset> shifts;  // empty: protocol default for the task
  std::optional<BlurSpec> blur = BlurSpec{};
  NoiseParams noise{1.0, 0.0, 2.0, {}};
  std::uint64_t seed = 0;
  // Frames are stored as 16-bit PGM holding round(value * intensity_scale).
  double intensity_scale = 256.0;
  std::string output_dir = ".";

  void validate() const;
};

// Everything needed to rebuild the forward model of a degraded data set.
// Paths are relative to the manifest's directory.
struct Manifest {
  Task task = Task::sr;
  int upscale = 2;
  std::vector<SubpixelOffset> shifts;
  std::optional<BlurSpec> blur;
  NoiseParams noise;
  std::uint64_t seed = 0;
  double intensity_scale = 1.0;
  Shape hr_shape;
  std::vector<std::string> frames;
  std::string gt;  // may be empty
};

Json to_json(const Manifest& manifest);
Manifest manifest_from_json(const Json& j);

struct RestoreConfig {
  std::string manifest_path;
  std::string gt_path;  // overrides the manifest's reference when set
  SolverConfig solver;
  std::string output_dir = ".";
  double peak = 255.0;
  bool dump_phi = false;
  bool timing = true;  // false writes wall_ms = 0 so traces replay byte for byte
  std::optional<Task> expected_task;  // rejects manifests of the other task
};

struct SweepConfig {
  RestoreConfig base;
  std::string param;  // lambda, rho0, eta, gamma, b, regularizer, data_term
  std::vector<Json> values;
};

DegradeConfig degrade_config_from_json(const Json& j, Task task);
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});
RestoreConfig restore_config_from_json(const Json& j);
SweepConfig sweep_config_from_json(const Json& j);

// Writes the LR frames, the (rescaled) reference and manifest.json into
// cfg.output_dir. Returns the manifest path.
std::string run_degrade(const DegradeConfig& cfg);

struct Problem {
  Manifest manifest;
  std::vector<FrameModel> frames;
  std::optional<GrayImage> gt;
};

Problem load_problem(const std::string& manifest_path, const std::string& gt_override = {});

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double sum_r2 = 0.0;
  double sum_s2 = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double psnr_db = 0.0;  // NaN without a reference
  double ssim = 0.0;
  double wall_ms = 0.0;
};

struct RestoreOutcome {
  GrayImage x;
  std::vector<TraceRow> trace;
  std::optional<QualityReport> quality;
  bool stopped_early = false;
};

// In-memory restoration with a per-iteration trace. `on_weights` sees the
// weighting state after each iteration (BSWTV only).
RestoreOutcome restore(std::span<const FrameModel> frames, const std::optional<GrayImage>& gt,
                       const SolverConfig& solver, double peak, bool timing,
                       const std::function<void(int, const WeightState&)>& on_weights = {});

// Loads the manifest, restores, and writes restored.pgm, trace.csv,
// report.json (and phi/xi dumps) into cfg.output_dir.
RestoreOutcome run_restore(const RestoreConfig& cfg);

std::string trace_csv(const std::vector<TraceRow>& rows);
void write_text(const std::string& path, const std::string& text);

struct SweepRow {
  std::string value;
  RestoreOutcome outcome;
};

// One restore per value, each in its own subdirectory, plus summary.csv.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

}  // namespace bswtv
