#include "bswtv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "bswtv/error.hpp"
#include "bswtv/pgm.hpp"
#include "bswtv/synthetic.hpp"

namespace bswtv {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

Task task_from_string(const std::string& s) {
  if (s == "denoise") return Task::denoise;
  if (s == "sr") return Task::sr;
  throw ConfigError("unknown task \"" + s + "\" (expected denoise or sr)");
}

RegularizerKind regularizer_from_string(const std::string& s) {
  if (s == "bswtv") return RegularizerKind::bswtv;
  if (s == "nltv") return RegularizerKind::nltv;
  if (s == "tv") return RegularizerKind::tv;
  throw ConfigError("unknown regularizer \"" + s + "\" (expected bswtv, nltv or tv)");
}

DataTerm data_term_from_string(const std::string& s) {
  if (s == "mpg") return DataTerm::mpg;
  if (s == "l2") return DataTerm::l2;
  throw ConfigError("unknown data_term \"" + s + "\" (expected mpg or l2)");
}

NoiseParams noise_from_json(const Json& j) {
  check_keys(j, "noise", {"alpha", "mu", "sigma"});
  NoiseParams n;
  read_opt(j, "alpha", n.alpha, "noise");
  read_opt(j, "mu", n.mu, "noise");
  read_opt(j, "sigma", n.sigma, "noise");
  return n;
}

Json noise_to_json(const NoiseParams& n) {
  return Json{{"alpha", n.alpha}, {"mu", n.mu}, {"sigma", n.sigma}};
}

std::optional<BlurSpec> blur_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  check_keys(j, "blur", {"sigma", "radius"});
  BlurSpec b;
  read_opt(j, "sigma", b.sigma, "blur");
  read_opt(j, "radius", b.radius, "blur");
  if (!(b.sigma > 0.0) || b.radius < 0) throw ConfigError("blur: need sigma > 0, radius >= 0");
  return b;
}

Json blur_to_json(const std::optional<BlurSpec>& b) {
  if (!b) return nullptr;
  return Json{{"sigma", b->sigma}, {"radius", b->radius}};
}

std::vector<SubpixelOffset> shifts_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("shifts: expected an array of [dx, dy] pairs");
  std::vector<SubpixelOffset> out;
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
      throw ConfigError("shifts: every entry must be [dx, dy]");
    }
    out.push_back({s[0].get<double>(), s[1].get<double>()});
  }
  return out;
}

std::optional<Kernel2D> make_kernel(const std::optional<BlurSpec>& b) {
  if (!b) return std::nullopt;
  return gaussian_kernel(b->sigma, b->radius);
}

GrayImage scaled(GrayImage img, double factor) {
  img *= factor;
  return img;
}

void write_scaled(const std::string& path, const GrayImage& img, double scale) {
  const PgmWriteReport rep = write_pgm(path, scaled(img, scale), 16);
  if (rep.clamped > 0) {
    std::cerr << "warning: " << rep.clamped << " pixel(s) clamped writing " << path << "\n";
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string value_label(const Json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void apply_param(SolverConfig& s, const std::string& param, const Json& v) {
  auto num = [&]() {
    if (!v.is_number()) throw ConfigError("sweep value for " + param + " must be a number");
    return v.get<double>();
  };
  if (param == "lambda") {
    s.lambda = num();
  } else if (param == "rho0") {
    s.rho0 = num();
  } else if (param == "eta") {
    if (s.regularizer == RegularizerKind::nltv) {
      s.nltv.eta = num();
    } else {
      s.bswtv.eta = num();
    }
  } else if (param == "gamma") {
    s.bswtv.gamma = num();
  } else if (param == "b") {
    s.bswtv.b = num();
  } else if (param == "max_iter") {
    s.max_iter = static_cast<int>(num());
  } else if (param == "regularizer") {
    s.regularizer = regularizer_from_string(value_label(v));
  } else if (param == "data_term") {
    s.data_term = data_term_from_string(value_label(v));
  } else if (param == "method") {
    const std::string m = value_label(v);
    const auto plus = m.find('+');
    if (plus == std::string::npos) throw ConfigError("method must look like \"mpg+bswtv\"");
    s.data_term = data_term_from_string(m.substr(0, plus));
    s.regularizer = regularizer_from_string(m.substr(plus + 1));
  } else {
    throw ConfigError("cannot sweep parameter \"" + param + "\"");
  }
}

}  // namespace

std::string to_string(Task task) { return task == Task::denoise ? "denoise" : "sr"; }

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::bswtv: return "bswtv";
    case RegularizerKind::nltv: return "nltv";
    case RegularizerKind::tv: return "tv";
  }
  return "?";
}

std::string to_string(DataTerm term) { return term == DataTerm::mpg ? "mpg" : "l2"; }

void DegradeConfig::validate() const {
  if (task == Task::denoise) {
    if (upscale != 1) throw ConfigError("denoise: upscale must be 1");
    if (blur) throw ConfigError("denoise: the system matrix is the identity, blur must be null");
    for (const auto& s : shifts) {
      if (s.dx != 0.0 || s.dy != 0.0) throw ConfigError("denoise: shifts must be zero");
    }
  } else if (upscale < 2) {
    throw ConfigError("sr: upscale must be >= 2");
  }
  if (!(intensity_scale > 0.0)) throw ConfigError("intensity_scale must be positive");
  if (gt_path.empty() && synthetic_size < 32) throw ConfigError("synthetic_size must be >= 32");
  noise.validate();
}

DegradeConfig degrade_config_from_json(const Json& j, Task task) {
  check_keys(j, "degrade", {"gt", "synthetic_size", "rescale_peak", "upscale", "shifts", "blur",
                            "noise", "seed", "intensity_scale", "output_dir"});
  DegradeConfig c;
  c.task = task;
  if (task == Task::denoise) {
    c.upscale = 1;
    c.blur.reset();
    c.noise = NoiseParams{0.01, 0.0, 2.0, {}};
  }
  read_opt(j, "gt", c.gt_path, "degrade");
  read_opt(j, "synthetic_size", c.synthetic_size, "degrade");
  read_opt(j, "rescale_peak", c.rescale_peak, "degrade");
  read_opt(j, "upscale", c.upscale, "degrade");
  if (j.contains("shifts")) c.shifts = shifts_from_json(j.at("shifts"));
  if (j.contains("blur")) c.blur = blur_from_json(j.at("blur"));
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  read_opt(j, "seed", c.seed, "degrade");
  read_opt(j, "intensity_scale", c.intensity_scale, "degrade");
  read_opt(j, "output_dir", c.output_dir, "degrade");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("degrade: ") + e.what());
  }
  return c;
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig s) {
  check_keys(j, "solver",
             {"lambda", "rho0", "max_iter", "c1", "c2", "c", "eps1", "eps2", "cg_iters", "cg_tol",
              "scg_iters", "scg_tol", "data_term", "regularizer", "bswtv", "nltv", "adapt_rho",
              "early_stop", "phi_from_init"});
  read_opt(j, "lambda", s.lambda, "solver");
  read_opt(j, "rho0", s.rho0, "solver");
  read_opt(j, "max_iter", s.max_iter, "solver");
  read_opt(j, "c1", s.c1, "solver");
  read_opt(j, "c2", s.c2, "solver");
  read_opt(j, "c", s.c, "solver");
  read_opt(j, "eps1", s.eps1, "solver");
  read_opt(j, "eps2", s.eps2, "solver");
  read_opt(j, "cg_iters", s.cg_iters, "solver");
  read_opt(j, "cg_tol", s.cg_tol, "solver");
  read_opt(j, "scg_iters", s.scg_iters, "solver");
  read_opt(j, "scg_tol", s.scg_tol, "solver");
  read_opt(j, "adapt_rho", s.adapt_rho, "solver");
  read_opt(j, "early_stop", s.early_stop, "solver");
  read_opt(j, "phi_from_init", s.phi_from_init, "solver");
  if (j.contains("data_term")) {
    std::string t;
    read_opt(j, "data_term", t, "solver");
    s.data_term = data_term_from_string(t);
  }
  if (j.contains("regularizer")) {
    std::string r;
    read_opt(j, "regularizer", r, "solver");
    s.regularizer = regularizer_from_string(r);
  }
  if (j.contains("bswtv")) {
    const Json& b = j.at("bswtv");
    check_keys(b, "solver.bswtv",
               {"eta", "gamma", "beta0", "patch", "sigma_phi0", "sigma_min", "a", "b"});
    read_opt(b, "eta", s.bswtv.eta, "solver.bswtv");
    read_opt(b, "gamma", s.bswtv.gamma, "solver.bswtv");
    read_opt(b, "beta0", s.bswtv.beta0, "solver.bswtv");
    read_opt(b, "patch", s.bswtv.patch, "solver.bswtv");
    read_opt(b, "sigma_phi0", s.bswtv.sigma_phi0, "solver.bswtv");
    read_opt(b, "sigma_min", s.bswtv.sigma_min, "solver.bswtv");
    read_opt(b, "a", s.bswtv.a, "solver.bswtv");
    read_opt(b, "b", s.bswtv.b, "solver.bswtv");
  }
  if (j.contains("nltv")) {
    const Json& n = j.at("nltv");
    check_keys(n, "solver.nltv", {"window", "patch", "eta"});
    read_opt(n, "window", s.nltv.window, "solver.nltv");
    read_opt(n, "patch", s.nltv.patch, "solver.nltv");
    read_opt(n, "eta", s.nltv.eta, "solver.nltv");
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

RestoreConfig restore_config_from_json(const Json& j) {
  check_keys(j, "restore", {"manifest", "gt", "solver", "output_dir", "peak", "dump_phi", "timing"});
  RestoreConfig c;
  if (!j.contains("manifest")) throw ConfigError("restore: \"manifest\" is required");
  read_opt(j, "manifest", c.manifest_path, "restore");
  read_opt(j, "gt", c.gt_path, "restore");
  read_opt(j, "output_dir", c.output_dir, "restore");
  read_opt(j, "peak", c.peak, "restore");
  read_opt(j, "dump_phi", c.dump_phi, "restore");
  read_opt(j, "timing", c.timing, "restore");
  c.solver = solver_config_from_json(j.contains("solver") ? j.at("solver") : Json::object());
  if (!(c.peak > 0.0)) throw ConfigError("restore: peak must be positive");
  return c;
}

SweepConfig sweep_config_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("sweep")) throw ConfigError("sweep: \"sweep\" block is required");
  Json base = j;
  base.erase("sweep");
  SweepConfig c;
  c.base = restore_config_from_json(base);
  const Json& s = j.at("sweep");
  check_keys(s, "sweep", {"param", "values"});
  read_opt(s, "param", c.param, "sweep");
  if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty()) {
    throw ConfigError("sweep.values must be a non-empty array");
  }
  c.values.assign(s.at("values").begin(), s.at("values").end());
  for (const auto& v : c.values) {
    SolverConfig probe = c.base.solver;
    apply_param(probe, c.param, v);
    try {
      probe.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("sweep value " + value_label(v) + ": " + e.what());
    }
  }
  return c;
}

Json to_json(const Manifest& m) {
  Json shifts = Json::array();
  for (const auto& s : m.shifts) shifts.push_back({s.dx, s.dy});
  return Json{{"task", to_string(m.task)},
              {"upscale", m.upscale},
              {"shifts", shifts},
              {"blur", blur_to_json(m.blur)},
              {"noise", noise_to_json(m.noise)},
              {"seed", m.seed},
              {"intensity_scale", m.intensity_scale},
              {"hr_width", m.hr_shape.width},
              {"hr_height", m.hr_shape.height},
              {"frames", m.frames},
              {"gt", m.gt}};
}

Manifest manifest_from_json(const Json& j) {
  check_keys(j, "manifest", {"task", "upscale", "shifts", "blur", "noise", "seed",
                             "intensity_scale", "hr_width", "hr_height", "frames", "gt"});
  for (const char* key : {"task", "upscale", "shifts", "noise", "hr_width", "hr_height", "frames"}) {
    if (!j.contains(key)) throw ConfigError(std::string("manifest: missing \"") + key + "\"");
  }
  Manifest m;
  std::string task;
  read_opt(j, "task", task, "manifest");
  m.task = task_from_string(task);
  read_opt(j, "upscale", m.upscale, "manifest");
  m.shifts = shifts_from_json(j.at("shifts"));
  m.blur = j.contains("blur") ? blur_from_json(j.at("blur")) : std::nullopt;
  m.noise = noise_from_json(j.at("noise"));
  read_opt(j, "seed", m.seed, "manifest");
  read_opt(j, "intensity_scale", m.intensity_scale, "manifest");
  read_opt(j, "hr_width", m.hr_shape.width, "manifest");
  read_opt(j, "hr_height", m.hr_shape.height, "manifest");
  read_opt(j, "frames", m.frames, "manifest");
  read_opt(j, "gt", m.gt, "manifest");
  if (m.frames.size() != m.shifts.size()) {
    throw ConfigError("manifest: frames and shifts differ in length");
  }
  if (m.frames.empty()) throw ConfigError("manifest: no frames");
  if (!(m.intensity_scale > 0.0)) throw ConfigError("manifest: intensity_scale must be positive");
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

namespace {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

std::string run_degrade(const DegradeConfig& cfg) {
  cfg.validate();
  GrayImage gt;
  if (cfg.gt_path.empty()) {
    gt = shapes_image(cfg.synthetic_size, cfg.rescale_peak > 0.0 ? cfg.rescale_peak : 200.0);
  } else {
    gt = read_pgm(cfg.gt_path);
    if (cfg.rescale_peak > 0.0) {
      const double top = *std::max_element(gt.values().begin(), gt.values().end());
      if (!(top > 0.0)) throw ConfigError("cannot rescale an all-zero reference image");
      gt *= cfg.rescale_peak / top;
    }
  }
  std::vector<SubpixelOffset> shifts = cfg.shifts;
  if (shifts.empty()) {
    shifts = cfg.task == Task::sr ? half_pixel_offsets() : std::vector<SubpixelOffset>{{0.0, 0.0}};
  }
  const auto frames =
      make_lr_frames(gt, shifts, make_kernel(cfg.blur), cfg.upscale, cfg.noise, cfg.seed);

  ensure_dir(cfg.output_dir);
  Manifest m;
  m.task = cfg.task;
  m.upscale = cfg.upscale;
  m.shifts = shifts;
  m.blur = cfg.blur;
  m.noise = cfg.noise;
  m.seed = cfg.seed;
  m.intensity_scale = cfg.intensity_scale;
  m.hr_shape = gt.shape();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%02zu.pgm", i);
    write_scaled((fs::path(cfg.output_dir) / name).string(), frames[i].observation,
                 cfg.intensity_scale);
    m.frames.emplace_back(name);
  }
  m.gt = "gt.pgm";
  write_scaled((fs::path(cfg.output_dir) / m.gt).string(), gt, cfg.intensity_scale);
  const std::string path = (fs::path(cfg.output_dir) / "manifest.json").string();
  write_text(path, to_json(m).dump(2) + "\n");
  return path;
}

Problem load_problem(const std::string& manifest_path, const std::string& gt_override) {
  Problem p;
  p.manifest = manifest_from_json(read_json_file(manifest_path));
  const Manifest& m = p.manifest;
  const fs::path dir = fs::path(manifest_path).parent_path();
  const double inv = 1.0 / m.intensity_scale;
  const auto kernel = make_kernel(m.blur);
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    GrayImage y = scaled(read_pgm((dir / m.frames[i]).string()), inv);
    LinearOp op = make_system_op(m.hr_shape, m.shifts[i], kernel, m.upscale);
    if (y.shape() != op.out_shape()) {
      throw ConfigError("manifest: frame " + m.frames[i] + " does not match the HR shape/factor");
    }
    p.frames.push_back(FrameModel{std::move(y), std::move(op), m.noise});
  }
  if (!gt_override.empty()) {
    p.gt = scaled(read_pgm(gt_override), inv);
  } else if (!m.gt.empty()) {
    p.gt = scaled(read_pgm((dir / m.gt).string()), inv);
  }
  if (p.gt && p.gt->shape() != m.hr_shape) throw ConfigError("reference image has the wrong shape");
  return p;
}

RestoreOutcome restore(std::span<const FrameModel> frames, const std::optional<GrayImage>& gt,
                       const SolverConfig& solver, double peak, bool timing,
                       const std::function<void(int, const WeightState&)>& on_weights) {
  RestoreOutcome out;
  const GrayImage init = initial_guess(frames);
  auto observer = [&](const IterationRecord& rec, const AdmmState& st) {
    TraceRow row;
    row.iter = rec.iter;
    row.objective = rec.objective;
    row.sum_r2 = rec.sum_r2;
    row.sum_s2 = rec.sum_s2;
    row.rho_min = rec.rho_min;
    row.rho_max = rec.rho_max;
    row.psnr_db = std::numeric_limits<double>::quiet_NaN();
    row.ssim = std::numeric_limits<double>::quiet_NaN();
    if (gt) {
      row.psnr_db = psnr(*gt, st.x, peak);
      row.ssim = ssim(*gt, st.x, peak);
    }
    row.wall_ms = timing ? rec.wall_ms : 0.0;
    out.trace.push_back(row);
    if (on_weights && solver.regularizer == RegularizerKind::bswtv) on_weights(rec.iter, st.weights);
  };
  SolveResult res = solve(frames, solver, init, observer);
  out.x = std::move(res.x);
  out.stopped_early = res.state.stopped_early;
  if (gt) out.quality = evaluate_quality(*gt, out.x, peak);
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  os << "iter,objective,sum_r2,sum_s2,rho_min,rho_max,psnr_db,ssim,wall_ms\n";
  for (const auto& r : rows) {
    os << r.iter << ',' << fmt(r.objective) << ',' << fmt(r.sum_r2) << ',' << fmt(r.sum_s2) << ','
       << fmt(r.rho_min) << ',' << fmt(r.rho_max) << ',' << fmt(r.psnr_db) << ',' << fmt(r.ssim)
       << ',' << fmt(r.wall_ms) << '\n';
  }
  return os.str();
}

RestoreOutcome run_restore(const RestoreConfig& cfg) {
  const Problem p = load_problem(cfg.manifest_path, cfg.gt_path);
  if (cfg.expected_task && *cfg.expected_task != p.manifest.task) {
    throw ConfigError("manifest describes a " + to_string(p.manifest.task) + " data set, not " +
                      to_string(*cfg.expected_task));
  }
  ensure_dir(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  const double scale = p.manifest.intensity_scale;

  std::function<void(int, const WeightState&)> dump;
  if (cfg.dump_phi) {
    if (cfg.solver.regularizer != RegularizerKind::bswtv) {
      std::cerr << "warning: --dump-phi only applies to the bswtv regularizer\n";
    }
    dump = [&](int k, const WeightState& w) {
      char name[32];
      std::snprintf(name, sizeof name, "phi_%03d.pgm", k);
      write_scaled((dir / name).string(), w.phi, 65535.0);
      std::snprintf(name, sizeof name, "xi_%03d.pgm", k);
      write_scaled((dir / name).string(), w.xi, 65535.0);
    };
  }
  RestoreOutcome out = restore(p.frames, p.gt, cfg.solver, cfg.peak, cfg.timing, dump);

  write_scaled((dir / "restored.pgm").string(), out.x, scale);
  write_text((dir / "trace.csv").string(), trace_csv(out.trace));
  Json report{{"task", to_string(p.manifest.task)},
              {"regularizer", to_string(cfg.solver.regularizer)},
              {"data_term", to_string(cfg.solver.data_term)},
              {"lambda", cfg.solver.lambda},
              {"iterations", out.trace.size()},
              {"stopped_early", out.stopped_early}};
  if (out.quality) {
    report["psnr_db"] = out.quality->identical ? Json("inf") : Json(out.quality->psnr_db);
    report["ssim"] = out.quality->ssim;
    report["mse"] = out.quality->mse;
  }
  write_text((dir / "report.json").string(), report.dump(2) + "\n");
  return out;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  std::ostringstream summary;
  summary << "param,value,iterations,objective,psnr_db,ssim\n";
  for (const auto& v : cfg.values) {
    RestoreConfig rc = cfg.base;
    apply_param(rc.solver, cfg.param, v);
    const std::string label = value_label(v);
    rc.output_dir = (fs::path(cfg.base.output_dir) / (cfg.param + "_" + label)).string();
    RestoreOutcome out = run_restore(rc);
    const double obj = out.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : out.trace.back().objective;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    summary << cfg.param << ',' << label << ',' << out.trace.size() << ',' << fmt(obj) << ','
            << fmt(out.quality ? out.quality->psnr_db : nan) << ','
            << fmt(out.quality ? out.quality->ssim : nan) << '\n';
    rows.push_back(SweepRow{label, std::move(out)});
  }
  ensure_dir(cfg.base.output_dir);
  write_text((fs::path(cfg.base.output_dir) / "summary.csv").string(), summary.str());
  return rows;
}

}  // namespace bswtv
