// potensor command-line front end: tensor generation, solving, trace
// diagnostics, and the small critical-point experiments. Machine-readable
// JSON goes to stdout, human logs to stderr.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "potensor/convergence_checks.hpp"
#include "potensor/diagnostics.hpp"
#include "potensor/io.hpp"
#include "potensor/nlslab.hpp"
#include "potensor/solver.hpp"

namespace fs = std::filesystem;
using potensor::io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<int> parse_dims(const std::string& str) {
  std::vector<int> dims;
  std::string cur;
  for (char c : str + "x") {
    if (c == 'x' || c == ',') {
      if (!cur.empty()) dims.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (dims.empty()) throw std::runtime_error("empty dims string");
  for (int d : dims)
    if (d < 1) throw std::runtime_error("nonpositive dimension");
  return dims;
}

int max_threads() {
  if (const char* env = std::getenv("POTENSOR_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, n) on up to max_threads() workers; results land
/// in index order so the merge is deterministic.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(max_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::uint64_t string_digest(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string factor_digest(const potensor::FactorSet& U) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    string_digest(potensor::io::to_json(U).dump())));
  return buf;
}

struct SolveFlags {
  std::string in_path;
  int rank = 1;
  int orth_modes = 1;
  double epsilon = -1.0;
  double kappa = -1.0;
  int max_sweeps = 5000;
  double tol_step = 1e-10;
  double tol_kkt = 1e-8;
  std::uint64_t seed = 0;
  std::string trace_dir;

  potensor::SolverConfig to_config() const {
    potensor::SolverConfig cfg;
    cfg.epsilon = epsilon;
    cfg.kappa = kappa;
    cfg.max_sweeps = max_sweeps;
    cfg.tol_step = tol_step;
    cfg.tol_kkt = tol_kkt;
    cfg.seed = seed;
    return cfg;
  }

  json to_json() const {
    return {{"in", in_path},         {"rank", rank},
            {"orth_modes", orth_modes}, {"epsilon", epsilon},
            {"kappa", kappa},        {"max_sweeps", max_sweeps},
            {"tol_step", tol_step},  {"tol_kkt", tol_kkt},
            {"seed", seed}};
  }
};

int run_gen(const std::string& kind, const std::string& dims_str, int rank,
            int orth_modes, double noise, std::uint64_t seed,
            const std::string& out_path) {
  const std::vector<int> dims = parse_dims(dims_str);
  potensor::Rng rng(seed);
  if (kind == "gaussian") {
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    std::vector<double> data(total);
    for (double& v : data) v = rng.next_gaussian();
    potensor::io::write_dtf_file(out_path, potensor::DenseTensor(dims, data));
    return 0;
  }
  if (kind != "planted") throw std::runtime_error("unknown kind " + kind);
  for (int d : dims)
    if (rank > d) throw std::runtime_error("planted: rank exceeds a dim");
  potensor::FactorSet truth;
  truth.orth_modes = orth_modes;
  for (std::size_t i = 0; i < dims.size(); ++i)
    truth.factors.push_back(
        static_cast<int>(i) < orth_modes
            ? potensor::random_orthonormal(dims[i], rank, rng)
            : potensor::random_unit_columns(dims[i], rank, rng));
  truth.lambda = Eigen::VectorXd(rank);
  for (int j = 0; j < rank; ++j) {
    const double mag = rng.next_uniform(1.0, 2.0);
    truth.lambda[j] = rng.next_uniform() < 0.5 ? -mag : mag;
  }
  potensor::DenseTensor signal = potensor::rank1_sum(truth);
  std::vector<double> data = signal.data();
  if (noise > 0.0) {
    std::vector<double> g(data.size());
    double gn = 0.0;
    for (double& v : g) {
      v = rng.next_gaussian();
      gn += v * v;
    }
    gn = std::sqrt(gn);
    const double scale = noise * potensor::frobenius(signal) / gn;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += scale * g[i];
  }
  potensor::io::write_dtf_file(out_path, potensor::DenseTensor(dims, data));
  json sidecar;
  sidecar["kind"] = "planted";
  sidecar["seed"] = seed;
  sidecar["noise"] = noise;
  sidecar["truth"] = potensor::io::to_json(truth);
  potensor::io::atomic_write(out_path + ".truth.json", sidecar.dump(2) + "\n");
  return 0;
}

std::optional<potensor::RateFit> try_rate_fit(
    const potensor::SolveResult& res) {
  std::vector<double> objectives;
  for (const auto& rec : res.trace) objectives.push_back(rec.objective);
  try {
    return potensor::rate_fit(objectives, res.norm_A, res.stabilization_sweep);
  } catch (const potensor::WindowTooShort&) {
    return std::nullopt;
  }
}

json result_json(const potensor::SolveResult& res) {
  json j;
  j["status"] = potensor::to_string(res.status);
  j["stabilization_sweep"] = res.stabilization_sweep;
  j["sweeps"] = res.trace.size();
  j["epsilon"] = res.epsilon;
  j["kappa"] = res.kappa;
  j["final_lambda"] = potensor::io::to_json(res.final_state.lambda);
  j["final_rank"] = res.final_state.rank();
  j["factor_digest"] = factor_digest(res.final_state);
  if (!res.trace.empty()) {
    j["final_objective"] = res.trace.back().objective;
    j["final_kkt_residual"] = res.trace.back().kkt_residual;
  }
  if (auto fit = try_rate_fit(res)) j["rate_fit"] = potensor::io::to_json(*fit);
  return j;
}

int run_solve(const SolveFlags& flags) {
  const potensor::DenseTensor A = potensor::io::read_dtf_file(flags.in_path);
  potensor::SolverConfig cfg = flags.to_config();
  cfg.validate();
  const potensor::SolveResult res =
      potensor::solve(A, flags.rank, flags.orth_modes, cfg);

  if (!flags.trace_dir.empty()) {
    fs::create_directories(flags.trace_dir);
    const fs::path dir(flags.trace_dir);
    potensor::io::atomic_write(dir / "trace.csv",
                               potensor::io::trace_csv(res, flags.orth_modes));
    potensor::io::atomic_write(dir / "result.json",
                               result_json(res).dump(2) + "\n");
    potensor::io::atomic_write(dir / "states.json",
                               potensor::io::to_json(res).dump() + "\n");
    json manifest;
    manifest["tool_version"] = kVersion;
    manifest["config"] = flags.to_json();
    manifest["input"] = fs::absolute(flags.in_path).string();
    manifest["input_digest"] = potensor::io::file_digest(flags.in_path);
    manifest["seed"] = flags.seed;
    manifest["outputs"] = {"trace.csv", "result.json", "states.json"};
    potensor::io::atomic_write(dir / "manifest.json",
                               manifest.dump(2) + "\n");
  }
  std::cout << result_json(res).dump(2) << "\n";
  switch (res.status) {
    case potensor::SolveStatus::Converged: return 0;
    case potensor::SolveStatus::MaxSweeps: return 2;
    case potensor::SolveStatus::AllTruncated: return 3;
  }
  return 2;
}

int run_diagnose(const std::string& trace_dir) {
  const fs::path dir(trace_dir);
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("missing manifest.json in " + trace_dir);
  const json manifest = json::parse(mf);
  const std::string input = manifest.at("input").get<std::string>();
  const std::string digest = potensor::io::file_digest(input);
  if (digest != manifest.at("input_digest").get<std::string>())
    throw std::runtime_error("input digest mismatch for " + input);
  const potensor::DenseTensor A = potensor::io::read_dtf_file(input);

  std::ifstream sf(dir / "states.json");
  if (!sf) throw std::runtime_error("missing states.json in " + trace_dir);
  const potensor::SolveResult res =
      potensor::io::solve_result_from_json(json::parse(sf));

  json out;
  out["trace_dir"] = fs::absolute(dir).string();
  out["status"] = potensor::to_string(res.status);
  out["sufficient_decrease"] = potensor::io::to_json(
      potensor::check_sufficient_decrease(res), "sufficient_decrease");
  const potensor::SubgradReport sg = potensor::check_subgrad_bound(A, res);
  json sgj;
  sgj["check"] = "subgrad_bound";
  sgj["checked"] = sg.checked;
  sgj["passed"] = sg.passed();
  sgj["normal_violations"] = json::array();
  for (const auto& v : sg.normal_violations)
    sgj["normal_violations"].push_back(
        {{"sweep", v.sweep}, {"lhs", v.lhs}, {"rhs", v.rhs}});
  sgj["bound_violations"] = json::array();
  for (const auto& v : sg.bound_violations)
    sgj["bound_violations"].push_back(
        {{"sweep", v.sweep}, {"lhs", v.lhs}, {"rhs", v.rhs}});
  out["subgrad_bound"] = sgj;

  const potensor::TruncationReport tr = potensor::check_truncation(res);
  out["truncation"] = {{"check", "truncation"},
                       {"passed", tr.passed()},
                       {"total_truncated", tr.total_truncated},
                       {"initial_rank", tr.initial_rank},
                       {"stable_after_recorded_sweep",
                        tr.stable_after_recorded_sweep}};

  if (auto fit = try_rate_fit(res))
    out["rate_fit"] = potensor::io::to_json(*fit);
  else
    out["rate_fit"] = nullptr;

  out["passed"] = potensor::check_sufficient_decrease(res).passed() &&
                  sg.passed() && tr.passed();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_experiment_location(const std::string& kind, int num_b, int starts,
                            std::uint64_t seed) {
  potensor::Rng rng(seed);
  const auto k = kind == "lu" ? potensor::nlslab::LocationKind::Lu
                              : potensor::nlslab::LocationKind::Hyperboloid;
  if (kind != "lu" && kind != "hyperboloid")
    throw std::runtime_error("unknown experiment kind " + kind);
  const auto sum = potensor::nlslab::location_experiment(k, num_b, starts, rng);
  json out = potensor::io::to_json(sum);
  out["seed"] = seed;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_experiment_rate(const std::string& dims_str, int rank, int orth_modes,
                        int num_seeds, std::uint64_t base_seed,
                        int max_sweeps) {
  const std::vector<int> dims = parse_dims(dims_str);
  std::vector<json> records(num_seeds);
  parallel_for(num_seeds, [&](int i) {
    potensor::Rng master(base_seed);
    potensor::SolverConfig cfg;
    cfg.seed = master.split(static_cast<std::uint64_t>(i)).next_u64();
    cfg.max_sweeps = max_sweeps;
    cfg.tol_step = 1e-12;
    potensor::Rng data_rng(cfg.seed ^ 0x5bf0a8b1ULL);
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    std::vector<double> data(total);
    for (double& v : data) v = data_rng.next_gaussian();
    const potensor::DenseTensor A(dims, data);
    const potensor::SolveResult res =
        potensor::solve(A, rank, orth_modes, cfg);
    json rec;
    rec["seed_index"] = i;
    rec["status"] = potensor::to_string(res.status);
    rec["sweeps"] = res.trace.size();
    if (auto fit = try_rate_fit(res))
      rec["rate_fit"] = potensor::io::to_json(*fit);
    else
      rec["rate_fit"] = nullptr;
    records[i] = std::move(rec);
  });
  json out;
  out["dims"] = dims;
  out["rank"] = rank;
  out["orth_modes"] = orth_modes;
  out["base_seed"] = base_seed;
  out["runs"] = records;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partially orthogonal tensor approximation toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a tensor file");
  std::string gen_kind = "gaussian", gen_dims, gen_out;
  int gen_rank = 1, gen_s = 1;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"gaussian",
                                                            "planted"}));
  gen->add_option("--dims", gen_dims)->required();
  gen->add_option("--rank", gen_rank);
  gen->add_option("--orth-modes", gen_s);
  gen->add_option("--noise", gen_noise);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  // solve
  auto* solve = app.add_subcommand("solve", "run the iAPD-ALS solver");
  SolveFlags sf;
  solve->add_option("input", sf.in_path)->required();
  solve->add_option("--rank", sf.rank)->required();
  solve->add_option("--orth-modes", sf.orth_modes);
  solve->add_option("--epsilon", sf.epsilon);
  solve->add_option("--kappa", sf.kappa);
  solve->add_option("--max-sweeps", sf.max_sweeps);
  solve->add_option("--tol-step", sf.tol_step);
  solve->add_option("--tol-kkt", sf.tol_kkt);
  solve->add_option("--seed", sf.seed);
  solve->add_option("--trace", sf.trace_dir);

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "check a recorded trace");
  std::string diag_dir;
  diag->add_option("trace_dir", diag_dir)->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a study");
  exp->require_subcommand(1);
  auto* loc = exp->add_subcommand("location", "critical-point location probe");
  std::string loc_kind = "hyperboloid";
  int loc_num_b = 100, loc_starts = 200;
  std::uint64_t loc_seed = 0;
  loc->add_option("--kind", loc_kind);
  loc->add_option("--num-b", loc_num_b);
  loc->add_option("--starts", loc_starts);
  loc->add_option("--seed", loc_seed);
  auto* rate = exp->add_subcommand("rate", "convergence-rate study");
  std::string rate_dims = "3x3x3x3";
  int rate_rank = 2, rate_s = 1, rate_seeds = 10, rate_max_sweeps = 5000;
  std::uint64_t rate_seed = 0;
  rate->add_option("--dims", rate_dims);
  rate->add_option("--rank", rate_rank);
  rate->add_option("--orth-modes", rate_s);
  rate->add_option("--seeds", rate_seeds);
  rate->add_option("--seed", rate_seed);
  rate->add_option("--max-sweeps", rate_max_sweeps);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return run_gen(gen_kind, gen_dims, gen_rank, gen_s, gen_noise, gen_seed,
                     gen_out);
    if (solve->parsed()) return run_solve(sf);
    if (diag->parsed()) return run_diagnose(diag_dir);
    if (loc->parsed())
      return run_experiment_location(loc_kind, loc_num_b, loc_starts,
                                     loc_seed);
    if (rate->parsed())
      return run_experiment_rate(rate_dims, rate_rank, rate_s, rate_seeds,
                                 rate_seed, rate_max_sweeps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
