#pragma once

// Consensus ADMM for
//   min_x  sum_i g_i(x) + lambda * sum_k || Phi_k (S_k - I) x ||_1
// with one block per observed frame (T_i = I, g_i the data term) and one
// block per weighted difference operator. Every iteration runs, in order:
// weighting-map update, CG x-update, per-block z-update (SCG for data blocks,
// soft threshold for regularizer blocks), penalty adaptation, dual ascent,
// and the relative-residual stopping test.

#include <functional>
#include <span>
#include <vector>

#include "bswtv/degrade.hpp"
#include "bswtv/fidelity.hpp"
#include "bswtv/image.hpp"
#include "bswtv/weighting.hpp"

namespace bswtv {

enum class RegularizerKind { bswtv, nltv, tv };

struct NltvParams {
  int window = 3;
  int patch = 3;
  double eta = 400.0;
};

struct SolverConfig {
  double lambda = 0.1;
  double rho0 = 1e-3;
  int max_iter = 200;
  double c1 = 2.0;
  double c2 = 2.0;
  double c = 10.0;
  double eps1 = 1e-4;
  double eps2 = 1e-4;
  int cg_iters = 100;
  double cg_tol = 1e-6;
  int scg_iters = 20;
  double scg_tol = 1e-6;
  DataTerm data_term = DataTerm::mpg;
  RegularizerKind regularizer = RegularizerKind::bswtv;
  BswtvParams bswtv;
  NltvParams nltv;
  bool adapt_rho = true;
  bool early_stop = true;
  // First weighting map computed from the initial guess rather than from x = 0.
  bool phi_from_init = true;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double sum_r2 = 0.0;
  double sum_s2 = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double wall_ms = 0.0;  // cumulative since the start of solve()
  std::vector<double> r_norm;
  std::vector<double> s_norm;
  std::vector<double> rho;  // penalties in effect for the next iteration
};

struct AdmmState {
  GrayImage x;
  std::vector<GrayImage> z;
  std::vector<GrayImage> p;
  std::vector<double> rho;
  std::vector<double> primal_res;  // latest ||r_i||
  std::vector<double> dual_res;    // latest ||s_i||
  std::vector<double> objective_trace;
  std::vector<IterationRecord> log;
  WeightState weights;
  int data_blocks = 0;
  bool stopped_early = false;

  std::size_t block_count() const { return z.size(); }
};

using IterationObserver = std::function<void(const IterationRecord&, const AdmmState&)>;

// m identity blocks followed by Phi (S_x - I) and Phi (S_y - I).
std::vector<LinearOp> make_constraint_ops(std::size_t m, const GrayImage& phi);
// m identity blocks followed by Phi_D (S_D - I) for every nonlocal shift D.
std::vector<LinearOp> make_constraint_ops(std::size_t m, Shape shape,
                                          const std::vector<NltvWeight>& maps);

struct CgReport {
  GrayImage x;
  int iterations = 0;
  double residual_norm = 0.0;
};

// Solves (sum rho_i T_i^T T_i) x = sum T_i^T (rho_i z_i - p_i) by CG, warm
// started at state.x.
CgReport x_update(const AdmmState& state, std::span<const LinearOp> ops, const SolverConfig& cfg);

struct ScgReport {
  GrayImage z;
  double objective = 0.0;
  double warm_objective = 0.0;
  int iterations = 0;
  bool stagnated = false;
};

// argmin_z g(z) + rho/2 ||z - v||^2, v = tx + p / rho, by scaled conjugate
// gradient warm-started at `warm`.
ScgReport z_data_update(const FrameModel& frame, const GrayImage& tx, const GrayImage& p,
                        double rho, const GrayImage& warm, const SolverConfig& cfg);

double soft_threshold(double v, double threshold);

// Elementwise soft threshold of tx + p / rho at lambda / rho.
GrayImage z_reg_update(const GrayImage& tx, const GrayImage& p, double rho, double lambda);

// p + rho (tx - z).
GrayImage dual_update(const GrayImage& p, const GrayImage& tx, const GrayImage& z, double rho);

// Grow rho when the primal residual dominates, shrink it when the dual does.
double penalty_update(double rho, double r_norm, double s_norm, const SolverConfig& cfg);

struct BlockResiduals {
  std::vector<GrayImage> r;  // T_i x - z_i
  std::vector<GrayImage> s;  // -rho_i T_i^T (z_i - z_i_old)
};

BlockResiduals residuals(std::span<const LinearOp> ops, const GrayImage& x_new,
                         std::span<const GrayImage> z_new, std::span<const GrayImage> z_old,
                         std::span<const double> rho);

// y_1 for denoising, bicubic(y_1) for super-resolution.
GrayImage initial_guess(std::span<const FrameModel> frames);

// Data term plus lambda times the L1 norm of every regularizer block.
double objective(std::span<const FrameModel> frames, const GrayImage& x,
                 std::span<const LinearOp> ops, double lambda, DataTerm term);

struct SolveResult {
  GrayImage x;
  AdmmState state;
};

SolveResult solve(std::span<const FrameModel> frames, const SolverConfig& cfg,
                  const GrayImage& init, const IterationObserver& observer = {});

}  // namespace bswtv
