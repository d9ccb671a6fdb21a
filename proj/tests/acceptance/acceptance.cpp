// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "bsml/postprocess.hpp"
#include "bsml/sim.hpp"
#include "checks.hpp"
#include "commands.hpp"
#include "io.hpp"

namespace fs = std::filesystem;
using namespace bsml;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back((ok ? "ok   " : "FAIL ") + what);
  }
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string summary(const char* name, const MetricSummary& s, double scale = 1.0) {
  return fmt::format("{} {:.4g} (se {:.2g}, n={})", name, s.mean * scale, s.se * scale, s.count);
}

void describe(Outcome& out, const StudyAggregate& a) {
  out.details.push_back(fmt::format("     rank bound {}: {} ok / {} failed; {}; {}; {}; {}; {}; raw-mean MSPE {:.4g}",
                                    a.rank_bound, a.succeeded, a.failed, summary("r_hat", a.rank_hat),
                                    summary("MSE(x1e-4)", a.mse, 1e4), summary("MSPE", a.mspe),
                                    summary("sens", a.sensitivity), summary("spec", a.specificity),
                                    a.posterior_mean_mspe.mean));
}

StudyResult run_plan(const cli::BenchmarkPlan& plan) {
  return run_study(plan.simulation, plan.replicates, plan.gibbs, plan.rank_grid, plan.threads);
}

Outcome criterion1() {
  Outcome out;
  const cli::BenchmarkPlan plan = cli::benchmark_preset("independent-200x30");
  const auto start = Clock::now();
  const StudyResult r = run_plan(plan);
  const StudyAggregate& a = r.aggregates.at(0);
  describe(out, a);
  out.require(a.failed == 0, "all 10 replicates completed");
  out.require(a.rank_hat.mean >= 2.8 && a.rank_hat.mean <= 3.3, "mean r_hat in [2.8, 3.3]");
  out.require(a.mspe.mean <= 0.15, "mean MSPE <= 0.15");
  out.require(a.mse.mean <= 10e-4, "mean MSE <= 10e-4");
  out.require(a.sensitivity.mean >= 0.95, "sensitivity >= 0.95");
  out.require(a.specificity.mean >= 0.85, "specificity >= 0.85");
  out.require(a.posterior_mean_mspe.mean < 0.2, "posterior-mean MSPE < 0.2");
  out.details.push_back(fmt::format("     wall time {:.0f} s on {} worker(s)", elapsed(start),
                                    worker_count(plan.threads, plan.replicates)));
  return out;
}

Outcome criterion2() {
  Outcome out;
  const StudyResult r = run_plan(cli::benchmark_preset("independent-500x10"));
  const StudyAggregate& a = r.aggregates.at(0);
  describe(out, a);
  out.require(a.failed == 0, "all 5 replicates completed");
  out.require(a.rank_hat.mean >= 2.8 && a.rank_hat.mean <= 3.3, "mean r_hat in [2.8, 3.3]");
  out.require(a.mspe.mean <= 0.5, "mean MSPE <= 0.5");
  return out;
}

Outcome criterion3() {
  Outcome out;
  cli::BenchmarkPlan plan = cli::benchmark_preset("rank-grid-1000x12");
  plan.rank_grid = {3, 5, 7, 9};
  plan.replicates = 3;
  const StudyResult r = run_plan(plan);
  for (const auto& a : r.aggregates) {
    describe(out, a);
    out.require(a.failed == 0 && a.sensitivity.mean >= 0.9,
                fmt::format("sensitivity >= 0.9 at rank bound {}", a.rank_bound));
    out.require(a.failed == 0 && a.specificity.mean >= 0.9,
                fmt::format("specificity >= 0.9 at rank bound {}", a.rank_bound));
  }
  return out;
}

Outcome criterion4() {
  Outcome out;
  const StudyResult r = run_plan(cli::benchmark_preset("compound-noise-500x10"));
  const StudyAggregate& a = r.aggregates.at(0);
  describe(out, a);
  out.require(a.failed == 0, "all 5 replicates completed");
  out.require(a.sensitivity.mean >= 0.9, "sensitivity >= 0.9");
  out.require(a.specificity.mean >= 0.9, "specificity >= 0.9");
  return out;
}

Outcome criterion5() {
  Outcome out;
  const int draws = 100000;
  const auto da = testing::structured_sampler_moments(501, draws);
  out.require(da.max_mean_z < 4.0 && da.max_cov_z < 4.0,
              fmt::format("data-augmentation sampler (d=8, 1e5 draws): max mean z {:.2f}, max cov z {:.2f}",
                          da.max_mean_z, da.max_cov_z));
  const auto ch = testing::cholesky_sampler_moments(502, draws);
  out.require(ch.max_mean_z < 4.0 && ch.max_cov_z < 4.0,
              fmt::format("Cholesky sampler (d=8, 1e5 draws): max mean z {:.2f}, max cov z {:.2f}", ch.max_mean_z,
                          ch.max_cov_z));
  for (const double rate : {0.05, 0.8, 20.0}) {
    const double ks = testing::local_slice_ks(503, 100000, 1, rate);
    out.require(ks < 0.01, fmt::format("lambda slice sampler, rate {}: KS {:.4f} over 1e5 sweeps", rate, ks));
  }
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, z] : testing::joint_consistency(504, 4000, 25)) {
    worst = std::max(worst, std::abs(z));
    detail += fmt::format("{}: {:+.2f}; ", name, z);
  }
  out.require(worst < 4.0, fmt::format("joint-consistency, 4000 x 25 cycles: max |z| {:.2f}", worst));
  out.details.push_back("     " + detail);
  return out;
}

Outcome criterion6() {
  Outcome out;
  Rng rng(601);
  double worst_grad = 0.0;
  bool zero_rows_ok = true;
  std::size_t selected_rows = 0;
  for (int instance = 0; instance < 100; ++instance) {
    const Index n = 5 + instance % 11, p = 2 + instance % 7, q = 1 + instance % 5;
    const MatrixXd x = testing::normal_matrix(n, p, rng);
    MatrixXd c = testing::normal_matrix(p, q, rng);
    c.row(0) *= 0.05;
    VectorXd mu(p);
    for (Index j = 0; j < p; ++j) mu[j] = std::exp(2.0 * rng.normal()) * static_cast<double>(n);
    const SparseEstimate est = select_rows(c, x, mu);
    for (Index j = 0; j < p; ++j) {
      const VectorXd xj = x.col(j);
      const MatrixXd r = xj * c.row(j);
      const VectorXd row = est.C_R.row(j).transpose();
      if (row.norm() > 0.0) {
        ++selected_rows;
        const VectorXd grad =
            2.0 * (xj.transpose() * (xj * row.transpose() - r)).transpose() + mu[j] * row / row.norm();
        worst_grad = std::max(worst_grad, grad.norm());
      } else {
        zero_rows_ok = zero_rows_ok && 2.0 * (xj.transpose() * r).norm() <= mu[j] * (1.0 + 1e-12);
      }
    }
  }
  out.require(worst_grad < 1e-8, fmt::format("subgradient residual over {} selected rows in 100 instances: max {:.2e}",
                                             selected_rows, worst_grad));
  out.require(zero_rows_ok, "zeroed rows satisfy 2||X_j^T R_j|| <= mu_j");

  double worst_ey = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index rows = 2 + t % 9, cols = 2 + t % 6;
    const MatrixXd c = testing::normal_matrix(rows, cols, rng);
    std::vector<Index> all;
    for (Index j = 0; j < rows; ++j) all.push_back(j);
    const Index keep = 1 + t % std::min(rows, cols);
    const BsmlEstimate est = reduce_rank(c, all, keep);
    const Eigen::JacobiSVD<MatrixXd> svd(c);
    const VectorXd s = svd.singularValues();
    worst_ey = std::max(worst_ey, std::abs((c - est.C_RR).squaredNorm() - s.tail(s.size() - keep).squaredNorm()));
  }
  out.require(worst_ey < 1e-8, fmt::format("Eckart-Young identity over 100 truncations: max error {:.2e}", worst_ey));

  MatrixXd x = MatrixXd::Ones(4, 1);
  MatrixXd c(1, 2);
  c << 1.0, 0.0;
  const SparseEstimate hand = select_rows(c, x, VectorXd::Ones(1));
  out.require(hand.C_R(0, 0) == 0.875 && hand.C_R(0, 1) == 0.0,
              fmt::format("||X_1||^2 = 4, row (1, 0), mu = 1 gives ({}, {})", hand.C_R(0, 0), hand.C_R(0, 1)));
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Manifest with run-time measurements removed.
std::string stable_manifest(const fs::path& path) {
  auto j = nlohmann::json::parse(read_text(path));
  j.erase("wall_seconds");
  j.erase("timing_seconds");
  j.erase("replicate_seconds");
  return j.dump();
}

void compare_runs(Outcome& out, const std::string& command, const fs::path& a, const fs::path& b,
                  const std::vector<std::string>& files) {
  bool same = true;
  std::string differing;
  for (const auto& f : files) {
    const bool eq = fs::exists(a / f) && read_text(a / f) == read_text(b / f);
    if (!eq) differing += " " + f;
    same = same && eq;
  }
  const bool manifest = stable_manifest(a / "manifest.json") == stable_manifest(b / "manifest.json");
  out.require(same && manifest, fmt::format("{}: {} artifacts byte-identical, manifest identical up to timings{}",
                                            command, files.size(), differing.empty() ? "" : " (differ:" + differing + ")"));
}

Outcome criterion7() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "bsml_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SimulationSpec spec;
  spec.n = 40;
  spec.p = 15;
  spec.q = 5;
  spec.r0 = 2;
  spec.s = 4;
  Rng rng(701);
  const auto [data, truth] = generate(spec, rng);
  write_text(dir / "x.csv", io::to_csv(data.X));
  write_text(dir / "y.csv", io::to_csv(data.Y));

  for (const char* run : {"fit_a", "fit_b"}) {
    const int code = cli::run({"fit", "--x", (dir / "x.csv").string(), "--y", (dir / "y.csv").string(), "--out",
                               (dir / run).string(), "--seed", "7", "--iterations", "300", "--burn-in", "100",
                               "--store-draws"});
    out.require(code == 0, fmt::format("fit run {} exited {}", run, code));
  }
  compare_runs(out, "fit", dir / "fit_a", dir / "fit_b",
               {"C_mean.csv", "C_lo.csv", "C_hi.csv", "C_R.csv", "C_RR.csv", "selection.json", "rank.json",
                "intervals.csv", "selection_frequency.json"});

  for (const char* run : {"post_a", "post_b"}) {
    const int code = cli::run({"postprocess", "--c-mean", (dir / "fit_a" / "C_mean.csv").string(), "--x",
                               (dir / "x.csv").string(), "--y", (dir / "y.csv").string(), "--out",
                               (dir / run).string()});
    out.require(code == 0, fmt::format("postprocess run {} exited {}", run, code));
  }
  compare_runs(out, "postprocess", dir / "post_a", dir / "post_b",
               {"C_R.csv", "C_RR.csv", "selection.json", "rank.json"});

  write_text(dir / "spec.json", R"({
    "simulation": {"n": 40, "p": 15, "q": 5, "r0": 2, "s": 4, "seed": 9},
    "gibbs": {"iterations": 120, "burn_in": 60, "seed": 3},
    "replicates": 2,
    "rank_grid": [2, 4]
  })");
  for (const char* run : {"bench_a", "bench_b"}) {
    const int code =
        cli::run({"benchmark", "--spec", (dir / "spec.json").string(), "--out", (dir / run).string()});
    out.require(code == 0, fmt::format("benchmark run {} exited {}", run, code));
  }
  compare_runs(out, "benchmark", dir / "bench_a", dir / "bench_b", {"results.csv", "aggregate.json", "rank_grid.csv"});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "Criteria to run (default: all)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7};

  const char* titles[] = {"",
                          "Sparse low-rank recovery, (200,30,3), 10 replicates",
                          "High-dimensional recovery, (500,10,3), 5 replicates",
                          "Selection stable across postulated ranks, (1000,12,3), grid {3,5,7,9}",
                          "Correlated noise with inverse-Wishart model, (500,10,3)",
                          "Sampler statistical correctness",
                          "Post-processing exactness",
                          "Determinism of every command"};
  Outcome (*runners[])() = {nullptr, criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7};

  bool all = true;
  for (const int c : criteria) {
    const auto start = Clock::now();
    Outcome out;
    try {
      out = runners[c]();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    std::cout << fmt::format("criterion {}: {} - {} ({:.1f} s)\n", c, out.pass ? "PASS" : "FAIL", titles[c],
                             elapsed(start));
    for (const auto& line : out.details) std::cout << "    " << line << "\n";
    std::cout.flush();
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
