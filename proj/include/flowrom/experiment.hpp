#pragma once

// Experiment orchestration: configuration, the relative time-domain L2 error,
// the method roster (opinf, opinf_lin, pod, dmd, dmdc, dmdquad) run over a
// grid of reduced orders, and emission of all result artifacts (summary JSON,
// trajectory / singular-value / constraint-residual / L-curve CSVs).

#include "flowrom/dmd.hpp"
#include "flowrom/io.hpp"
#include "flowrom/opinf.hpp"
#include "flowrom/pod.hpp"
#include "flowrom/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <map>
#include <optional>
#include <thread>

namespace flowrom {

inline double error_l2(const Matrix& reference, const Matrix& candidate, double dt) {
  if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols()) {
    throw std::invalid_argument("error_l2: trajectories must share grid and state dimension");
  }
  if (!(dt > 0)) throw std::invalid_argument("error_l2: dt must be positive");
  const Index n = reference.cols();
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double w = (k == 0 || k == n - 1) ? 0.5 * dt : dt;  // trapezoidal endpoints
    num += w * (reference.col(k) - candidate.col(k)).squaredNorm();
    den += w * reference.col(k).squaredNorm();
  }
  if (den == 0.0) throw std::invalid_argument("error_l2: reference trajectory has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

/// Named input signals for the experiment protocol.
inline InputSampler make_signal(const std::string& name, Index m) {
  if (name == "sin-decay") {
    return [m](double t) { return Vector::Constant(m, std::sin(2.0 * t) * std::exp(-0.05 * t)); };
  }
  if (name == "zero") return zero_input(m);
  if (name == "constant") {
    return [m](double) { return Vector::Constant(m, 1.0); };
  }
  throw std::invalid_argument("unknown input signal '" + name + "' (expected sin-decay, zero, or constant)");
}

inline std::vector<double> log_spaced(double lo, double hi, Index count) {
  if (!(lo > 0) || !(hi >= lo) || count < 2) throw std::invalid_argument("log_spaced: bad range");
  std::vector<double> out(count);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (Index i = 0; i < count; ++i) {
    out[i] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

struct ExperimentConfig {
  // model source: a manifest path, or the generator parameters
  std::string model_file;
  std::uint64_t seed = 0;
  Index n_v = 4, n_p = 1, m = 1;

  double t0 = 0.0, t_end = 6.0;
  Index steps = 512;

  std::string input_signal = "sin-decay";
  double uperp_const = 0.0;
  std::string initial_condition = "zero";  // "zero" or "stokes"

  std::vector<Index> orders = {3};
  std::vector<std::string> methods = {"opinf", "opinf_lin", "pod", "dmd", "dmdc", "dmdquad"};

  double tol = -1.0;  // explicit SVD tolerance; < 0 selects via the L-curve
  double lcurve_min = 1e-11, lcurve_max = 1e-6;
  Index lcurve_points = 11;

  std::string out_dir;

  void check() const {
    if (methods.empty()) throw std::invalid_argument("config: methods list is empty");
    for (Index r : orders) {
      if (r < 1) throw std::invalid_argument("config: reduced orders must be >= 1");
    }
    if (orders.empty()) throw std::invalid_argument("config: orders list is empty");
    if (steps < 1 || !(t_end > t0)) throw std::invalid_argument("config: bad time grid");
    if (tol < 0 && (!(lcurve_min > 0) || !(lcurve_max >= lcurve_min) || lcurve_points < 3)) {
      throw std::invalid_argument("config: L-curve range must be positive with at least 3 points");
    }
    if (initial_condition != "zero" && initial_condition != "stokes") {
      throw std::invalid_argument("config: initial_condition must be zero or stokes");
    }
    static const std::vector<std::string> known = {"opinf", "opinf_lin", "pod", "dmd", "dmdc", "dmdquad"};
    for (const std::string& mth : methods) {
      if (std::find(known.begin(), known.end(), mth) == known.end()) {
        throw std::invalid_argument("config: unknown method '" + mth + "'");
      }
    }
  }

  Json to_json() const {
    Json j;
    if (!model_file.empty()) j["model_file"] = model_file;
    j["seed"] = seed;
    j["n_v"] = n_v;
    j["n_p"] = n_p;
    j["m"] = m;
    j["t0"] = t0;
    j["t_end"] = t_end;
    j["steps"] = steps;
    j["input_signal"] = input_signal;
    j["uperp_const"] = uperp_const;
    j["initial_condition"] = initial_condition;
    j["orders"] = orders;
    j["methods"] = methods;
    j["tol"] = tol;
    j["lcurve_min"] = lcurve_min;
    j["lcurve_max"] = lcurve_max;
    j["lcurve_points"] = lcurve_points;
    return j;
  }

  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig cfg;
    cfg.model_file = j.value("model_file", std::string());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_v = j.value("n_v", cfg.n_v);
    cfg.n_p = j.value("n_p", cfg.n_p);
    cfg.m = j.value("m", cfg.m);
    cfg.t0 = j.value("t0", cfg.t0);
    cfg.t_end = j.value("t_end", cfg.t_end);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.input_signal = j.value("input_signal", cfg.input_signal);
    cfg.uperp_const = j.value("uperp_const", cfg.uperp_const);
    cfg.initial_condition = j.value("initial_condition", cfg.initial_condition);
    if (j.contains("orders")) cfg.orders = j.at("orders").get<std::vector<Index>>();
    if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
    cfg.tol = j.value("tol", cfg.tol);
    cfg.lcurve_min = j.value("lcurve_min", cfg.lcurve_min);
    cfg.lcurve_max = j.value("lcurve_max", cfg.lcurve_max);
    cfg.lcurve_points = j.value("lcurve_points", cfg.lcurve_points);
    return cfg;
  }
};

struct MethodResult {
  std::string method;
  Index order = 0;
  double rel_l2_error = 0.0;
  double basis_constraint_residual = 0.0;
  double tol_used = 0.0;
  double wall_time_s = 0.0;  // console diagnostic; not serialized (outputs stay deterministic)
  std::string error;         // nonempty if this cell failed
};

struct ResultSummary {
  std::vector<MethodResult> results;
  bool all_ok() const {
    for (const MethodResult& r : results) {
      if (!r.error.empty()) return false;
    }
    return true;
  }
};

inline unsigned experiment_threads(Index cells) {
  unsigned limit = std::thread::hardware_concurrency();
  if (limit == 0) limit = 1;
  if (const char* env = std::getenv("OPINF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) limit = static_cast<unsigned>(v);
  }
  return std::min<unsigned>(limit, static_cast<unsigned>(std::max<Index>(cells, 1)));
}

namespace detail {

struct CellOutput {
  MethodResult result;
  Matrix lifted;  // n_v x (N+1) surrogate trajectory
  std::vector<LCurvePoint> lcurve;
};

struct PreparedOrder {
  PodBasis basis;
  Matrix Xhat;
  Matrix Xdot;
  double constraint_res = 0.0;
};

inline CellOutput run_cell(const std::string& method, Index order, const QuadDaeModel& model,
                           const SnapshotSet& snaps, const PreparedOrder& prep, const ExperimentConfig& cfg,
                           const InputSampler& u_of_t) {
  const auto started = std::chrono::steady_clock::now();
  CellOutput out;
  out.result.method = method;
  out.result.order = order;
  out.result.basis_constraint_residual = prep.constraint_res;

  const double dt = snaps.uniform_dt();
  const Index N = snaps.samples() - 1;
  const Vector x0 = prep.Xhat.col(0);
  const TimeGrid grid(snaps.times(0), snaps.times(N), N);
  const ScalarSampler uperp_of_t = [&cfg](double) { return cfg.uperp_const; };

  // Continuous surrogates are rolled out with the reduced IMEX scheme so the
  // comparison against the IMEX training data is not floored by the mismatch
  // of two different time discretizations.
  if (method == "opinf" || method == "opinf_lin") {
    const RegressorFlags flags =
        method == "opinf" ? RegressorFlags::quadratic_model() : RegressorFlags::linear_model();
    const RegressorMatrix reg = assemble_regressors(prep.Xhat, snaps.U, Matrix(), flags);
    double tol = cfg.tol;
    if (tol < 0) {
      out.lcurve = l_curve_scan(reg.data, prep.Xdot, log_spaced(cfg.lcurve_min, cfg.lcurve_max, cfg.lcurve_points));
      tol = pick_tolerance(out.lcurve);
    }
    out.result.tol_used = tol;
    const ReducedQuadModel rom = infer_velocity_model(prep.Xhat, prep.Xdot, snaps.U, flags, tol);
    out.lifted = prep.basis.vectors * imex_euler_reduced(rom, x0, u_of_t, uperp_of_t, grid);
  } else if (method == "pod") {
    // Intrusive baseline: Galerkin reduction assumed to yield a pure ODE
    // (the reduced pressure coupling is dropped regardless of its size).
    const GalerkinReduced red = galerkin_reduce(model, prep.basis);
    const ReducedQuadModel rom = red.ode();
    out.result.tol_used = 0.0;
    out.lifted = prep.basis.vectors * imex_euler_reduced(rom, x0, u_of_t, uperp_of_t, grid);
  } else {
    // discrete-time baselines, trained and rolled out on the projected data
    double tol = cfg.tol;
    DiscreteModel dm;
    if (method == "dmd") {
      const double sigma1 = Eigen::BDCSVD<Matrix>(prep.Xhat.leftCols(N)).singularValues()(0);
      if (tol < 0) tol = 1e-10 * sigma1;
      dm = dmd(prep.Xhat, tol);
      out.result.tol_used = tol;
      out.lifted = prep.basis.vectors * rollout(dm, x0, N);
    } else {
      Matrix regressors;
      if (method == "dmdc") {
        regressors.resize(prep.Xhat.rows() + snaps.U.rows(), N);
        regressors << prep.Xhat.leftCols(N), snaps.U.leftCols(N);
        if (tol < 0) tol = 1e-10 * Eigen::BDCSVD<Matrix>(regressors).singularValues()(0);
        dm = dmdc(prep.Xhat, snaps.U, tol);
      } else if (method == "dmdquad") {
        regressors.resize(prep.Xhat.rows() + quad_feature_dim(prep.Xhat.rows()) + snaps.U.rows(), N);
        regressors << prep.Xhat.leftCols(N), quad_features_columns(prep.Xhat.leftCols(N)), snaps.U.leftCols(N);
        if (tol < 0) tol = 1e-10 * Eigen::BDCSVD<Matrix>(regressors).singularValues()(0);
        dm = dmdquad(prep.Xhat, snaps.U, tol);
      } else {
        throw std::invalid_argument("unknown method '" + method + "'");
      }
      out.result.tol_used = tol;
      out.lifted = prep.basis.vectors * rollout(dm, x0, N, snaps.U);
    }
  }

  out.result.rel_l2_error = error_l2(snaps.V, out.lifted, dt);
  out.result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

inline void write_trajectory_csv(const fs::path& path, const Vector& times, const Matrix& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << "t";
  for (Index i = 0; i < traj.rows(); ++i) out << ",v" << (i + 1);
  out << '\n';
  for (Index k = 0; k < traj.cols(); ++k) {
    out << times(k);
    for (Index i = 0; i < traj.rows(); ++i) out << ',' << traj(i, k);
    out << '\n';
  }
}

inline void write_lcurve_csv(const fs::path& path, const std::vector<LCurvePoint>& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << "tol,residual_norm,solution_norm,rank\n";
  for (const LCurvePoint& pt : points) {
    out << pt.tol << ',' << pt.residual_norm << ',' << pt.solution_norm << ',' << pt.rank << '\n';
  }
}

}  // namespace detail

/// Runs the full protocol: build (or load) the model, simulate training data,
/// compute POD bases, run every requested method at every requested order on
/// the training input, and write the artifacts into cfg.out_dir:
///
///   config.json, model/, snapshots/, singular_values.csv,
///   constraint_residual.csv, lcurve_<method>_r<r>.csv (L-curve mode),
///   traj_<method>_r<r>.csv, summary.json
///
/// Failures of a single method/order cell are recorded in the summary and do
/// not abort the remaining cells; everything computed is still flushed.
inline ResultSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  if (cfg.out_dir.empty()) throw std::invalid_argument("config: output directory not set");
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  save_json(out_dir / "config.json", cfg.to_json());

  auto stage = [](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + name + ": " + e.what());
    }
  };

  const QuadDaeModel model = stage("model", [&] {
    return cfg.model_file.empty() ? random_demo(cfg.seed, cfg.n_v, cfg.n_p, cfg.m) : load_model(cfg.model_file);
  });
  save_model(out_dir / "model", model);

  const InputSampler u_of_t = make_signal(cfg.input_signal, model.n_inputs());
  const ScalarSampler uperp_of_t = [&cfg](double) { return cfg.uperp_const; };
  const TimeGrid grid(cfg.t0, cfg.t_end, cfg.steps);

  const SnapshotSet snaps = stage("simulate", [&] {
    Vector v0 = Vector::Zero(model.n_v());
    if (cfg.initial_condition == "stokes") v0 = stokes_steady(model, u_of_t(cfg.t0), cfg.uperp_const).first;
    return imex_euler_dae(model, v0, u_of_t, uperp_of_t, grid);
  });
  save_snapshots(out_dir / "snapshots", snaps);

  {  // singular values of the velocity snapshot matrix
    Eigen::BDCSVD<Matrix> svd(snaps.V);
    std::ofstream out(out_dir / "singular_values.csv");
    out << std::setprecision(17) << "index,sigma\n";
    for (Index i = 0; i < svd.singularValues().size(); ++i) {
      out << (i + 1) << ',' << svd.singularValues()(i) << '\n';
    }
  }

  std::map<Index, detail::PreparedOrder> prepared;
  stage("pod", [&] {
    const double dt = grid.dt();
    for (Index r : cfg.orders) {
      if (prepared.count(r)) continue;
      detail::PreparedOrder prep;
      prep.basis = pod_basis(snaps.V, r);
      prep.Xhat = project_snapshots(prep.basis, snaps.V);
      prep.Xdot = estimate_derivatives(prep.Xhat, dt);
      prep.constraint_res = constraint_residual(model.A12, prep.basis);
      prepared.emplace(r, std::move(prep));
    }
    return 0;
  });

  {
    std::ofstream out(out_dir / "constraint_residual.csv");
    out << std::setprecision(17) << "order,residual\n";
    for (const auto& [r, prep] : prepared) out << r << ',' << prep.constraint_res << '\n';
  }

  struct Cell {
    std::string method;
    Index order;
  };
  std::vector<Cell> cells;
  for (const std::string& method : cfg.methods) {
    for (Index r : cfg.orders) cells.push_back({method, r});
  }

  std::vector<detail::CellOutput> outputs(cells.size());
  const unsigned threads = experiment_threads(static_cast<Index>(cells.size()));
  auto worker = [&](size_t i) {
    const Cell& cell = cells[i];
    try {
      outputs[i] = detail::run_cell(cell.method, cell.order, model, snaps, prepared.at(cell.order), cfg, u_of_t);
    } catch (const std::exception& e) {
      outputs[i].result.method = cell.method;
      outputs[i].result.order = cell.order;
      outputs[i].result.error = std::string("stage ") + cell.method + ": " + e.what();
    }
  };
  if (threads <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) worker(i);
  } else {
    std::vector<std::future<void>> jobs;
    std::atomic<size_t> next{0};
    for (unsigned t = 0; t < threads; ++t) {
      jobs.push_back(std::async(std::launch::async, [&] {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) worker(i);
      }));
    }
    for (auto& job : jobs) job.get();
  }

  // file writes happen on this thread only
  ResultSummary summary;
  Json jresults = Json::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    const detail::CellOutput& out = outputs[i];
    summary.results.push_back(out.result);
    Json cell;
    cell["method"] = out.result.method;
    cell["order"] = out.result.order;
    if (out.result.error.empty()) {
      cell["rel_l2_error"] = out.result.rel_l2_error;
      cell["constraint_residual"] = out.result.basis_constraint_residual;
      cell["tol"] = out.result.tol_used;
      const std::string tag = out.result.method + "_r" + std::to_string(out.result.order);
      detail::write_trajectory_csv(out_dir / ("traj_" + tag + ".csv"), snaps.times, out.lifted);
      if (!out.lcurve.empty()) detail::write_lcurve_csv(out_dir / ("lcurve_" + tag + ".csv"), out.lcurve);
    } else {
      cell["error"] = out.result.error;
    }
    jresults.push_back(cell);
  }
  Json jsummary;
  jsummary["format"] = "flowrom-summary";
  jsummary["results"] = jresults;
  save_json(out_dir / "summary.json", jsummary);
  return summary;
}

/// Loads and validates a snapshot manifest; when a model manifest accompanies
/// the data, also reports how well the data satisfies the constraint,
/// ||A12^T V + Bperp Uperp||_F / ||V||_F.
struct IngestReport {
  SnapshotSet snaps;
  bool has_model = false;
  double data_constraint_residual = 0.0;
};

inline IngestReport ingest_snapshots(const fs::path& snapshot_manifest, const fs::path& model_manifest = {}) {
  IngestReport report;
  report.snaps = load_snapshots(snapshot_manifest);
  if (!model_manifest.empty()) {
    const QuadDaeModel model = load_model(model_manifest);
    if (model.n_v() != report.snaps.V.rows()) {
      throw IoError("ingest: model n_v does not match snapshot rows");
    }
    Matrix res = model.A12.transpose() * report.snaps.V;
    if (model.has_constraint_forcing() && report.snaps.Uperp.size() != 0) {
      res += model.Bperp * report.snaps.Uperp;
    }
    const double vnorm = report.snaps.V.norm();
    report.data_constraint_residual = vnorm > 0 ? res.norm() / vnorm : 0.0;
    report.has_model = true;
  }
  return report;
}

}  // namespace flowrom
