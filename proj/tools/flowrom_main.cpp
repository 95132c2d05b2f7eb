// Command-line front end: model generation, DAE simulation, POD bases,
// operator inference, DMD baselines, the full method-comparison experiment,
// L-curve scans, and snapshot ingestion.
//
// Exit codes: 0 success, 2 configuration / file-format error, 3 numerical
// failure. OPINF_THREADS caps the parallelism of the comparison grid.

#include "flowrom/flowrom.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace flowrom;

struct GridArgs {
  double t0 = 0.0;
  double tend = 6.0;
  Index steps = 512;

  void attach(CLI::App* cmd) {
    cmd->add_option("--t0", t0, "start time")->capture_default_str();
    cmd->add_option("--tend", tend, "end time")->capture_default_str();
    cmd->add_option("--steps", steps, "number of time steps")->capture_default_str();
  }
};

struct GeneratorArgs {
  std::uint64_t seed = 0;
  Index nv = 4;
  Index np = 1;
  Index m = 1;
  double bperp = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "generator seed")->capture_default_str();
    cmd->add_option("--nv", nv, "velocity dimension")->capture_default_str();
    cmd->add_option("--np", np, "pressure dimension")->capture_default_str();
    cmd->add_option("--m", m, "input dimension")->capture_default_str();
    cmd->add_option("--bperp", bperp, "constraint forcing entry (0 keeps the constraint homogeneous)")
        ->capture_default_str();
  }

  QuadDaeModel build() const {
    QuadDaeModel model = random_demo(seed, nv, np, m);
    if (bperp != 0.0) model.Bperp = Matrix::Constant(np, 1, bperp);
    return model;
  }
};

QuadDaeModel model_from(const std::string& model_file, const GeneratorArgs& gen) {
  return model_file.empty() ? gen.build() : load_model(model_file);
}

int cmd_generate(const GeneratorArgs& gen, const std::string& out_dir) {
  const QuadDaeModel model = gen.build();
  const ValidationReport rep = validate(model);
  save_model(out_dir, model);
  std::cout << "model: n_v=" << model.n_v() << " n_p=" << model.n_p() << " m=" << model.n_inputs()
            << "  E11 SPD=" << (rep.e11_spd ? "yes" : "no") << "  rank(A12)=" << rep.a12_rank
            << "  cond(S)=" << rep.s_condition << "\n"
            << "wrote " << out_dir << "/model.json\n";
  return 0;
}

int cmd_simulate(const std::string& model_file, const GeneratorArgs& gen, const GridArgs& grid_args,
                 const std::string& signal, double uperp, const std::string& ic, const std::string& out_dir) {
  const QuadDaeModel model = model_from(model_file, gen);
  const TimeGrid grid(grid_args.t0, grid_args.tend, grid_args.steps);
  const InputSampler u_of_t = make_signal(signal, model.n_inputs());
  Vector v0 = Vector::Zero(model.n_v());
  if (ic == "stokes") v0 = stokes_steady(model, u_of_t(grid.t0), uperp).first;
  const SnapshotSet snaps =
      imex_euler_dae(model, v0, u_of_t, [uperp](double) { return uperp; }, grid);
  save_snapshots(out_dir, snaps);
  std::cout << "wrote " << out_dir << "/snapshots.json (" << snaps.samples() << " samples)\n";
  return 0;
}

int cmd_pod(const std::string& snapshots_file, const std::string& model_file, Index order, bool weighted,
            bool divfree, const std::string& out_dir) {
  const SnapshotSet snaps = load_snapshots(snapshots_file);
  QuadDaeModel model;
  const bool have_model = !model_file.empty();
  if (have_model) model = load_model(model_file);
  if ((weighted || divfree) && !have_model) {
    throw std::invalid_argument("--weighted/--divfree require --model");
  }
  PodBasis basis = weighted ? pod_basis(snaps.V, order, &model.E11) : pod_basis(snaps.V, order);
  if (divfree) basis = divfree_correct(basis, LerayProjector(model));
  fs::create_directories(out_dir);
  write_matrix_blob(fs::path(out_dir) / "basis.bin", basis.vectors);
  {
    std::ofstream sv(fs::path(out_dir) / "singular_values.csv");
    sv << std::setprecision(17) << "index,sigma\n";
    for (Index i = 0; i < basis.singular_values.size(); ++i) sv << (i + 1) << ',' << basis.singular_values(i) << '\n';
  }
  std::cout << "basis: " << basis.vectors.rows() << " x " << basis.vectors.cols() << "\n";
  if (have_model) {
    std::cout << "constraint residual ||A12^T V||_F/||V||_F = " << constraint_residual(model.A12, basis) << "\n";
  }
  std::cout << "wrote " << out_dir << "/basis.bin\n";
  return 0;
}

std::vector<LCurvePoint> scan_for(const Matrix& data, const Matrix& rhs, double lo, double hi, Index n) {
  return l_curve_scan(data, rhs, log_spaced(lo, hi, n));
}

int cmd_infer(const std::string& snapshots_file, Index order, bool linear, bool pressure, double tol,
              double lmin, double lmax, Index lpoints, const std::string& out_dir) {
  const SnapshotSet snaps = load_snapshots(snapshots_file);
  const double dt = snaps.uniform_dt();
  const PodBasis basis = pod_basis(snaps.V, order);
  const Matrix Xhat = project_snapshots(basis, snaps.V);
  const Matrix Xdot = estimate_derivatives(Xhat, dt);
  const RegressorFlags flags = linear ? RegressorFlags::linear_model() : RegressorFlags::quadratic_model();
  fs::create_directories(out_dir);

  const RegressorMatrix reg = assemble_regressors(Xhat, snaps.U, Matrix(), flags);
  if (tol < 0) {
    const auto points = scan_for(reg.data, Xdot, lmin, lmax, lpoints);
    detail::write_lcurve_csv(fs::path(out_dir) / "lcurve.csv", points);
    tol = pick_tolerance(points);
    std::cout << "L-curve tolerance: " << tol << "\n";
  }
  const ReducedQuadModel rom = infer_velocity_model(Xhat, Xdot, snaps.U, flags, tol);
  save_reduced_model(fs::path(out_dir) / "reduced_model", rom);
  write_matrix_blob(fs::path(out_dir) / "basis.bin", basis.vectors);
  std::cout << "wrote " << out_dir << "/reduced_model (order " << order << ", tol " << tol << ")\n";

  if (pressure) {
    if (snaps.P.size() == 0) throw std::invalid_argument("--pressure requires pressure snapshots");
    const Index rp = std::min<Index>(order, numerical_rank(snaps.P));
    const PodBasis pbasis = pod_basis(snaps.P, rp);
    const Matrix Phat = project_snapshots(pbasis, snaps.P);
    const PressureMap map = infer_pressure_map(Phat, Xhat, snaps.U, flags, tol);
    const fs::path pdir = fs::path(out_dir) / "pressure_map";
    fs::create_directories(pdir);
    write_matrix_blob(pdir / "A.bin", map.A);
    if (map.H.size() != 0) write_matrix_blob(pdir / "H.bin", expand_quadratic_operator(map.H));
    if (map.B.size() != 0) write_matrix_blob(pdir / "B.bin", map.B);
    write_matrix_blob(pdir / "pressure_basis.bin", pbasis.vectors);
    std::cout << "wrote " << out_dir << "/pressure_map (order " << rp << ")\n";
  }
  return 0;
}

int cmd_dmd(const std::string& snapshots_file, Index order, const std::string& method, double tol,
            const std::string& out_dir) {
  const SnapshotSet snaps = load_snapshots(snapshots_file);
  const PodBasis basis = pod_basis(snaps.V, order);
  const Matrix Xhat = project_snapshots(basis, snaps.V);
  DiscreteModel dm;
  if (method == "dmd") {
    dm = dmd(Xhat, tol);
  } else if (method == "dmdc") {
    dm = dmdc(Xhat, snaps.U, tol);
  } else if (method == "dmdquad") {
    dm = dmdquad(Xhat, snaps.U, tol);
  } else {
    throw std::invalid_argument("unknown DMD variant '" + method + "' (expected dmd, dmdc, dmdquad)");
  }
  fs::create_directories(out_dir);
  Json manifest;
  manifest["format"] = "flowrom-discrete";
  manifest["version"] = 1;
  manifest["order"] = dm.order();
  manifest["method"] = method;
  Json mats;
  write_matrix_blob(fs::path(out_dir) / "A.bin", dm.A);
  mats["A"] = "A.bin";
  if (dm.H.size() != 0) {
    write_matrix_blob(fs::path(out_dir) / "H.bin", expand_quadratic_operator(dm.H));
    mats["H"] = "H.bin";
  }
  if (dm.B.size() != 0) {
    write_matrix_blob(fs::path(out_dir) / "B.bin", dm.B);
    mats["B"] = "B.bin";
  }
  manifest["matrices"] = mats;
  write_matrix_blob(fs::path(out_dir) / "basis.bin", basis.vectors);
  save_json(fs::path(out_dir) / "discrete_model.json", manifest);
  std::cout << "wrote " << out_dir << "/discrete_model.json\n";
  return 0;
}

int cmd_lcurve(const std::string& snapshots_file, Index order, bool linear, double lmin, double lmax,
               Index lpoints, const std::string& out_dir) {
  const SnapshotSet snaps = load_snapshots(snapshots_file);
  const double dt = snaps.uniform_dt();
  const PodBasis basis = pod_basis(snaps.V, order);
  const Matrix Xhat = project_snapshots(basis, snaps.V);
  const Matrix Xdot = estimate_derivatives(Xhat, dt);
  const RegressorFlags flags = linear ? RegressorFlags::linear_model() : RegressorFlags::quadratic_model();
  const RegressorMatrix reg = assemble_regressors(Xhat, snaps.U, Matrix(), flags);
  const auto points = scan_for(reg.data, Xdot, lmin, lmax, lpoints);
  fs::create_directories(out_dir);
  detail::write_lcurve_csv(fs::path(out_dir) / "lcurve.csv", points);
  std::cout << "knee tolerance: " << pick_tolerance(points) << "\nwrote " << out_dir << "/lcurve.csv\n";
  return 0;
}

int cmd_compare(ExperimentConfig cfg) {
  const ResultSummary summary = run_experiment(cfg);
  std::cout << "method      order   rel_l2_error   constraint_res   tol          wall[s]\n";
  for (const MethodResult& r : summary.results) {
    if (!r.error.empty()) {
      std::cout << r.method << " r=" << r.order << "  FAILED: " << r.error << "\n";
      continue;
    }
    std::cout << r.method;
    for (size_t i = r.method.size(); i < 12; ++i) std::cout << ' ';
    std::cout << r.order << "       " << std::scientific << r.rel_l2_error << "   "
              << r.basis_constraint_residual << "     " << r.tol_used << "   " << std::defaultfloat
              << r.wall_time_s << "\n";
  }
  std::cout << "wrote " << cfg.out_dir << "/summary.json\n";
  if (!summary.all_ok()) throw std::runtime_error("one or more comparison cells failed");
  return 0;
}

int cmd_ingest(const std::string& snapshots_file, const std::string& model_file, const std::string& inputs_file,
               const std::string& out_dir) {
  IngestReport report = ingest_snapshots(snapshots_file, model_file);
  if (!inputs_file.empty()) {
    const Matrix U = read_matrix_auto(inputs_file);
    if (U.cols() != report.snaps.samples()) {
      throw IoError("ingest: --inputs has " + std::to_string(U.cols()) + " columns, expected " +
                    std::to_string(report.snaps.samples()));
    }
    report.snaps.U = U;
  }
  std::cout << "snapshots: " << report.snaps.V.rows() << " states x " << report.snaps.samples() << " samples"
            << (report.snaps.P.size() ? ", with pressure" : "") << (report.snaps.U.size() ? ", with inputs" : "")
            << "\n"
            << "grid: [" << report.snaps.times(0) << ", " << report.snaps.times(report.snaps.samples() - 1)
            << "], uniform=" << (report.snaps.uniform() ? "yes" : "no") << "\n";
  if (report.has_model) {
    std::cout << "data constraint residual: " << report.data_constraint_residual << "\n";
  }
  if (!out_dir.empty()) {
    save_snapshots(out_dir, report.snaps);
    std::cout << "wrote " << out_dir << "/snapshots.json\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowrom: learning low-dimensional quadratic models for incompressible-flow DAEs"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a random demo model and write its manifest");
  GeneratorArgs gen_gen;
  std::string gen_out;
  gen_gen.attach(generate);
  generate->add_option("--out", gen_out, "output directory")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "integrate the DAE with IMEX Euler and write snapshots");
  GeneratorArgs sim_gen;
  GridArgs sim_grid;
  std::string sim_model, sim_signal = "sin-decay", sim_ic = "zero", sim_out;
  double sim_uperp = 0.0;
  sim_gen.attach(simulate);
  sim_grid.attach(simulate);
  simulate->add_option("--model", sim_model, "model manifest (default: generate from --seed/--nv/--np/--m)");
  simulate->add_option("--signal", sim_signal, "input signal: sin-decay, zero, constant")->capture_default_str();
  simulate->add_option("--uperp", sim_uperp, "constant constraint input u_perp")->capture_default_str();
  simulate->add_option("--ic", sim_ic, "initial condition: zero or stokes")->capture_default_str();
  simulate->add_option("--out", sim_out, "output directory")->required();

  // pod
  auto* pod = app.add_subcommand("pod", "compute a POD basis from velocity snapshots");
  std::string pod_snaps, pod_model, pod_out;
  Index pod_order = 3;
  bool pod_weighted = false, pod_divfree = false;
  pod->add_option("--snapshots", pod_snaps, "snapshot manifest")->required();
  pod->add_option("--model", pod_model, "model manifest (enables diagnostics, --weighted, --divfree)");
  pod->add_option("--order", pod_order, "basis size")->capture_default_str();
  pod->add_flag("--weighted", pod_weighted, "E11-weighted basis (V^T E11 V = I)");
  pod->add_flag("--divfree", pod_divfree, "project the basis onto the divergence-free subspace");
  pod->add_option("--out", pod_out, "output directory")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "operator inference of a reduced velocity model");
  std::string inf_snaps, inf_out;
  Index inf_order = 3, inf_lpoints = 11;
  bool inf_linear = false, inf_pressure = false;
  double inf_tol = -1.0, inf_lmin = 1e-11, inf_lmax = 1e-6;
  infer->add_option("--snapshots", inf_snaps, "snapshot manifest")->required();
  infer->add_option("--order", inf_order, "reduced order")->capture_default_str();
  infer->add_flag("--linear", inf_linear, "linear variant (no quadratic block)");
  infer->add_flag("--pressure", inf_pressure, "also infer the algebraic pressure map");
  infer->add_option("--tol", inf_tol, "SVD truncation tolerance (default: L-curve knee)");
  infer->add_option("--lcurve-min", inf_lmin, "smallest L-curve tolerance")->capture_default_str();
  infer->add_option("--lcurve-max", inf_lmax, "largest L-curve tolerance")->capture_default_str();
  infer->add_option("--lcurve-points", inf_lpoints, "number of L-curve tolerances")->capture_default_str();
  infer->add_option("--out", inf_out, "output directory")->required();

  // dmd
  auto* dmdcmd = app.add_subcommand("dmd", "fit a discrete-time baseline (dmd, dmdc, dmdquad)");
  std::string dmd_snaps, dmd_method = "dmd", dmd_out;
  Index dmd_order = 3;
  double dmd_tol = -1.0;
  dmdcmd->add_option("--snapshots", dmd_snaps, "snapshot manifest")->required();
  dmdcmd->add_option("--order", dmd_order, "reduced order")->capture_default_str();
  dmdcmd->add_option("--method", dmd_method, "dmd, dmdc, or dmdquad")->capture_default_str();
  dmdcmd->add_option("--tol", dmd_tol, "SVD truncation tolerance (default: 1e-10 * sigma_1)");
  dmdcmd->add_option("--out", dmd_out, "output directory")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "run the full method comparison and write all artifacts");
  ExperimentConfig cmp_cfg;
  std::string cmp_config_file;
  std::vector<Index> cmp_orders;
  std::vector<std::string> cmp_methods;
  compare->add_option("--config", cmp_config_file, "JSON experiment config (flags override its values)");
  compare->add_option("--model", cmp_cfg.model_file, "model manifest (default: generate)");
  compare->add_option("--seed", cmp_cfg.seed, "generator seed")->capture_default_str();
  compare->add_option("--nv", cmp_cfg.n_v, "velocity dimension")->capture_default_str();
  compare->add_option("--np", cmp_cfg.n_p, "pressure dimension")->capture_default_str();
  compare->add_option("--m", cmp_cfg.m, "input dimension")->capture_default_str();
  compare->add_option("--t0", cmp_cfg.t0, "start time")->capture_default_str();
  compare->add_option("--tend", cmp_cfg.t_end, "end time")->capture_default_str();
  compare->add_option("--steps", cmp_cfg.steps, "number of time steps")->capture_default_str();
  compare->add_option("--signal", cmp_cfg.input_signal, "input signal")->capture_default_str();
  compare->add_option("--uperp", cmp_cfg.uperp_const, "constant constraint input")->capture_default_str();
  compare->add_option("--ic", cmp_cfg.initial_condition, "initial condition: zero or stokes")->capture_default_str();
  compare->add_option("--order", cmp_orders, "reduced order (repeatable)");
  compare->add_option("--method", cmp_methods, "method (repeatable): opinf, opinf_lin, pod, dmd, dmdc, dmdquad");
  compare->add_option("--tol", cmp_cfg.tol, "SVD tolerance (default: L-curve knee per method/order)");
  compare->add_option("--lcurve-min", cmp_cfg.lcurve_min, "smallest L-curve tolerance")->capture_default_str();
  compare->add_option("--lcurve-max", cmp_cfg.lcurve_max, "largest L-curve tolerance")->capture_default_str();
  compare->add_option("--lcurve-points", cmp_cfg.lcurve_points, "number of L-curve tolerances")->capture_default_str();
  compare->add_option("--out", cmp_cfg.out_dir, "output directory")->required();

  // lcurve
  auto* lcurve = app.add_subcommand("lcurve", "scan SVD tolerances and report the knee");
  std::string lc_snaps, lc_out;
  Index lc_order = 3, lc_points = 11;
  bool lc_linear = false;
  double lc_min = 1e-11, lc_max = 1e-6;
  lcurve->add_option("--snapshots", lc_snaps, "snapshot manifest")->required();
  lcurve->add_option("--order", lc_order, "reduced order")->capture_default_str();
  lcurve->add_flag("--linear", lc_linear, "linear regressors");
  lcurve->add_option("--lcurve-min", lc_min, "smallest tolerance")->capture_default_str();
  lcurve->add_option("--lcurve-max", lc_max, "largest tolerance")->capture_default_str();
  lcurve->add_option("--lcurve-points", lc_points, "number of tolerances")->capture_default_str();
  lcurve->add_option("--out", lc_out, "output directory")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate externally produced snapshots");
  std::string ing_snaps, ing_model, ing_inputs, ing_out;
  ingest->add_option("--snapshots", ing_snaps, "snapshot manifest")->required();
  ingest->add_option("--model", ing_model, "model manifest (adds the constraint-residual report)");
  ingest->add_option("--inputs", ing_inputs, "attach an input matrix (blob or CSV) as U");
  ingest->add_option("--out", ing_out, "re-export the validated snapshot set here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return cmd_generate(gen_gen, gen_out);
    if (*simulate) return cmd_simulate(sim_model, sim_gen, sim_grid, sim_signal, sim_uperp, sim_ic, sim_out);
    if (*pod) return cmd_pod(pod_snaps, pod_model, pod_order, pod_weighted, pod_divfree, pod_out);
    if (*infer)
      return cmd_infer(inf_snaps, inf_order, inf_linear, inf_pressure, inf_tol, inf_lmin, inf_lmax, inf_lpoints,
                       inf_out);
    if (*dmdcmd) return cmd_dmd(dmd_snaps, dmd_order, dmd_method, dmd_tol, dmd_out);
    if (*compare) {
      ExperimentConfig cfg = cmp_cfg;
      if (!cmp_config_file.empty()) {
        cfg = ExperimentConfig::from_json(load_json(cmp_config_file));
        cfg.out_dir = cmp_cfg.out_dir;
        // explicit flags win over the config file
        for (const std::string& flag :
             {"--model", "--seed", "--nv", "--np", "--m", "--t0", "--tend", "--steps", "--signal", "--uperp",
              "--ic", "--tol", "--lcurve-min", "--lcurve-max", "--lcurve-points"}) {
          if (compare->count(flag) == 0) continue;
          if (flag == "--model") cfg.model_file = cmp_cfg.model_file;
          else if (flag == "--seed") cfg.seed = cmp_cfg.seed;
          else if (flag == "--nv") cfg.n_v = cmp_cfg.n_v;
          else if (flag == "--np") cfg.n_p = cmp_cfg.n_p;
          else if (flag == "--m") cfg.m = cmp_cfg.m;
          else if (flag == "--t0") cfg.t0 = cmp_cfg.t0;
          else if (flag == "--tend") cfg.t_end = cmp_cfg.t_end;
          else if (flag == "--steps") cfg.steps = cmp_cfg.steps;
          else if (flag == "--signal") cfg.input_signal = cmp_cfg.input_signal;
          else if (flag == "--uperp") cfg.uperp_const = cmp_cfg.uperp_const;
          else if (flag == "--ic") cfg.initial_condition = cmp_cfg.initial_condition;
          else if (flag == "--tol") cfg.tol = cmp_cfg.tol;
          else if (flag == "--lcurve-min") cfg.lcurve_min = cmp_cfg.lcurve_min;
          else if (flag == "--lcurve-max") cfg.lcurve_max = cmp_cfg.lcurve_max;
          else if (flag == "--lcurve-points") cfg.lcurve_points = cmp_cfg.lcurve_points;
        }
      }
      if (!cmp_orders.empty()) cfg.orders = cmp_orders;
      if (!cmp_methods.empty()) cfg.methods = cmp_methods;
      return cmd_compare(cfg);
    }
    if (*lcurve) return cmd_lcurve(lc_snaps, lc_order, lc_linear, lc_min, lc_max, lc_points, lc_out);
    if (*ingest) return cmd_ingest(ing_snaps, ing_model, ing_inputs, ing_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
