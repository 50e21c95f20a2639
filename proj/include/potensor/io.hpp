#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "potensor/convergence_checks.hpp"
#include "potensor/diagnostics.hpp"
#include "potensor/nlslab.hpp"
#include "potensor/solver.hpp"
#include "potensor/tensor.hpp"

namespace potensor::io {

using nlohmann::json;

/// Shortest decimal that round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// .dtf tensor text format: order, dims, then row-major values, whitespace
// separated. The parser accepts arbitrary whitespace and rejects count
// mismatches or trailing garbage.
// ---------------------------------------------------------------------------

inline void write_dtf(std::ostream& os, const DenseTensor& A) {
  os << A.order() << "\n";
  for (int m = 0; m < A.order(); ++m)
    os << A.dim(m) << (m + 1 < A.order() ? ' ' : '\n');
  for (std::size_t i = 0; i < A.size(); ++i)
    os << format_double(A.data()[i])
       << ((i + 1) % 8 == 0 || i + 1 == A.size() ? '\n' : ' ');
}

inline DenseTensor read_dtf(std::istream& is) {
  int k = 0;
  if (!(is >> k) || k < 1)
    throw std::runtime_error("dtf: missing or invalid order");
  std::vector<int> dims(k);
  std::size_t total = 1;
  for (int m = 0; m < k; ++m) {
    if (!(is >> dims[m]) || dims[m] < 1)
      throw std::runtime_error("dtf: missing or invalid dimension");
    total *= static_cast<std::size_t>(dims[m]);
  }
  std::vector<double> data(total);
  for (std::size_t i = 0; i < total; ++i)
    if (!(is >> data[i])) throw std::runtime_error("dtf: too few values");
  double extra;
  if (is >> extra) throw std::runtime_error("dtf: trailing values");
  return DenseTensor(std::move(dims), std::move(data));
}

/// Writes through a temp file and renames, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
  }
  std::filesystem::rename(tmp, path);
}

inline void write_dtf_file(const std::filesystem::path& path,
                           const DenseTensor& A) {
  std::ostringstream os;
  write_dtf(os, A);
  atomic_write(path, os.str());
}

inline DenseTensor read_dtf_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_dtf(is);
}

/// FNV-1a 64-bit over raw file bytes, as a hex string.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (is.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------------------
// Trace CSV: one row per sweep, deterministic order and formatting.
// ---------------------------------------------------------------------------

inline std::string trace_csv(const SolveResult& res, int s) {
  std::ostringstream os;
  os << "sweep,objective,step_norm,joint_step_norm,kkt_residual,rank";
  for (int i = 1; i <= s; ++i) os << ",sigma_min_" << i;
  os << ",proximal_count,truncated\n";
  for (const SweepRecord& rec : res.trace) {
    os << rec.sweep << ',' << format_double(rec.objective) << ','
       << format_double(rec.step_norm) << ','
       << format_double(rec.joint_step_norm) << ','
       << format_double(rec.kkt_residual) << ',' << rec.rank_after;
    for (int i = 0; i < s; ++i)
      os << ','
         << (i < static_cast<int>(rec.sigma_min.size())
                 ? format_double(rec.sigma_min[i])
                 : std::string());
    int prox = 0;
    for (double a : rec.proximal_alpha)
      if (a > 0.0) ++prox;
    os << ',' << prox << ',';
    for (std::size_t t = 0; t < rec.truncated.size(); ++t)
      os << (t ? ";" : "") << rec.truncated[t];
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON serialization of factor sets, solve results, and reports.
// ---------------------------------------------------------------------------

inline json to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j.at(0).size() : 0;
  Eigen::MatrixXd M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c)
      M(i, c) = j.at(i).at(c).get<double>();
  return M;
}

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

inline json to_json(const FactorSet& U) {
  json j;
  j["orth_modes"] = U.orth_modes;
  j["lambda"] = to_json(U.lambda);
  j["factors"] = json::array();
  for (const auto& F : U.factors) j["factors"].push_back(to_json(F));
  return j;
}

inline FactorSet factor_set_from_json(const json& j) {
  FactorSet U;
  U.orth_modes = j.at("orth_modes").get<int>();
  U.lambda = vector_from_json(j.at("lambda"));
  for (const auto& F : j.at("factors")) U.factors.push_back(matrix_from_json(F));
  return U;
}

inline json to_json(const ModeWork& w) {
  json j;
  j["V"] = to_json(w.V);
  j["lambda_pre"] = to_json(w.lambda_pre);
  j["lambda_post"] = to_json(w.lambda_post);
  j["alpha"] = w.alpha;
  if (std::isfinite(w.sigma_min)) j["sigma_min"] = w.sigma_min;
  return j;
}

inline ModeWork mode_work_from_json(const json& j) {
  ModeWork w;
  w.V = matrix_from_json(j.at("V"));
  w.lambda_pre = vector_from_json(j.at("lambda_pre"));
  w.lambda_post = vector_from_json(j.at("lambda_post"));
  w.alpha = j.at("alpha").get<double>();
  if (j.contains("sigma_min")) w.sigma_min = j.at("sigma_min").get<double>();
  return w;
}

inline json to_json(const SolveResult& res) {
  json j;
  j["status"] = to_string(res.status);
  j["stabilization_sweep"] = res.stabilization_sweep;
  j["epsilon"] = res.epsilon;
  j["kappa"] = res.kappa;
  j["norm_A"] = res.norm_A;
  j["initial"] = to_json(res.initial);
  j["final"] = to_json(res.final_state);
  j["trace"] = json::array();
  for (const SweepRecord& rec : res.trace) {
    json r;
    r["sweep"] = rec.sweep;
    r["objective"] = rec.objective;
    r["step_norm"] = rec.step_norm;
    r["joint_step_norm"] = rec.joint_step_norm;
    r["kkt_residual"] = rec.kkt_residual;
    r["rank_after"] = rec.rank_after;
    r["sigma_min"] = rec.sigma_min;
    r["proximal_alpha"] = rec.proximal_alpha;
    r["truncated"] = rec.truncated;
    r["zero_contraction"] = rec.zero_contraction;
    if (!rec.work.empty()) {
      r["work"] = json::array();
      for (const ModeWork& w : rec.work) r["work"].push_back(to_json(w));
      r["state"] = to_json(rec.state);
    }
    j["trace"].push_back(std::move(r));
  }
  return j;
}

inline SolveResult solve_result_from_json(const json& j) {
  SolveResult res;
  const std::string st = j.at("status").get<std::string>();
  res.status = st == "Converged"      ? SolveStatus::Converged
               : st == "AllTruncated" ? SolveStatus::AllTruncated
                                      : SolveStatus::MaxSweeps;
  res.stabilization_sweep = j.at("stabilization_sweep").get<int>();
  res.epsilon = j.at("epsilon").get<double>();
  res.kappa = j.at("kappa").get<double>();
  res.norm_A = j.at("norm_A").get<double>();
  res.initial = factor_set_from_json(j.at("initial"));
  res.final_state = factor_set_from_json(j.at("final"));
  for (const auto& r : j.at("trace")) {
    SweepRecord rec;
    rec.sweep = r.at("sweep").get<int>();
    rec.objective = r.at("objective").get<double>();
    rec.step_norm = r.at("step_norm").get<double>();
    rec.joint_step_norm = r.at("joint_step_norm").get<double>();
    rec.kkt_residual = r.at("kkt_residual").get<double>();
    rec.rank_after = r.at("rank_after").get<int>();
    rec.sigma_min = r.at("sigma_min").get<std::vector<double>>();
    rec.proximal_alpha = r.at("proximal_alpha").get<std::vector<double>>();
    rec.truncated = r.at("truncated").get<std::vector<int>>();
    rec.zero_contraction = r.at("zero_contraction").get<bool>();
    if (r.contains("work")) {
      for (const auto& w : r.at("work"))
        rec.work.push_back(mode_work_from_json(w));
      rec.state = factor_set_from_json(r.at("state"));
    }
    res.trace.push_back(std::move(rec));
  }
  return res;
}

inline json to_json(const CheckReport& rep, const char* name) {
  json j;
  j["check"] = name;
  j["checked"] = rep.checked;
  j["passed"] = rep.passed();
  j["violations"] = json::array();
  for (const Violation& v : rep.violations)
    j["violations"].push_back({{"sweep", v.sweep}, {"lhs", v.lhs},
                               {"rhs", v.rhs}});
  return j;
}

inline json to_json(const RateFit& fit) {
  json j;
  j["q_ratios"] = fit.q_ratios;
  j["q_tail_median"] = fit.q_tail_median;
  j["r_linear_rho"] = fit.r_linear_rho;
  j["r_squared"] = fit.r_squared;
  j["window_begin"] = fit.window_begin;
  j["window_end"] = fit.window_end;
  j["sublinear_flag"] = fit.sublinear_flag;
  return j;
}

inline json to_json(const nlslab::LocationSummary& sum) {
  json j;
  j["kind"] = sum.kind == nlslab::LocationKind::Hyperboloid ? "hyperboloid"
                                                            : "lu";
  j["num_targets"] = sum.num_targets;
  j["starts"] = sum.starts;
  j["violations"] = sum.violations;
  j["empty_targets"] = sum.empty_targets;
  j["minima"] = json::array();
  for (double m : sum.minima)
    if (std::isnan(m))
      j["minima"].push_back(nullptr);
    else
      j["minima"].push_back(m);
  return j;
}

}  // namespace potensor::io
