#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bsml/error.hpp"
#include "bsml/gibbs.hpp"
#include "bsml/postprocess.hpp"
#include "io.hpp"

#ifndef BSML_VERSION
#define BSML_VERSION "dev"
#endif

namespace bsml::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// JSON field helpers

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw InputError(where + "." + key + ": unknown field");
  }
}

template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

std::size_t count_field(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InputError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v[i]));
  return out;
}

json shape_json(const MatrixXd& m) { return json::array({m.rows(), m.cols()}); }

void write_json(const fs::path& path, const json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Flags shared by fit and benchmark

struct ChainFlags {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
  std::optional<Index> rank_bound;
  std::optional<std::string> noise_model;
  bool store_draws = false;

  void attach(CLI::App& app) {
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--alpha", alpha, "Likelihood power in (0, 1]");
    app.add_option("--iterations", iterations, "Gibbs sweeps");
    app.add_option("--burn-in", burn_in, "Discarded leading sweeps");
    app.add_option("--thin", thin, "Keep every k-th sweep after burn-in");
    app.add_option("--rank-bound", rank_bound, "Postulated rank bound q* (0 = q)");
    app.add_option("--noise-model", noise_model, "diagonal or inverse-wishart");
    app.add_flag("--store-draws", store_draws, "Keep every retained draw of C");
  }

  void apply(GibbsConfig& c) const {
    if (seed) c.seed = *seed;
    if (alpha) c.alpha = *alpha;
    if (iterations) c.iterations = *iterations;
    if (burn_in) c.burn_in = *burn_in;
    if (thin) c.thin = *thin;
    if (rank_bound) c.rank_bound = *rank_bound;
    if (noise_model) {
      try {
        c.noise_model = noise_model_from_string(*noise_model);
      } catch (const ContractError& e) {
        throw InputError(std::string("--noise-model: ") + e.what());
      }
    }
    if (store_draws) c.store_draws = true;
  }
};

void validate_config(const GibbsConfig& c, Index q, const std::string& where) {
  try {
    c.validate(q);
  } catch (const ContractError& e) {
    throw InputError(where + ": " + e.what());
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// Subtracts column means unless they are already zero to rounding.
VectorXd center_columns(MatrixXd& y) {
  VectorXd offsets = y.colwise().mean().transpose();
  for (Index h = 0; h < y.cols(); ++h) {
    const double scale = std::max(1.0, y.col(h).cwiseAbs().maxCoeff());
    if (std::abs(offsets[h]) <= 1e-12 * scale) {
      offsets[h] = 0.0;
    } else {
      y.col(h).array() -= offsets[h];
    }
  }
  return offsets;
}

Dataset load_dataset(const fs::path& x_path, const fs::path& y_path, VectorXd& offsets, VectorXd& x_offsets) {
  Dataset data;
  data.X = io::read_csv(x_path).values;
  data.Y = io::read_csv(y_path).values;
  if (data.X.rows() != data.Y.rows()) {
    throw InputError(fmt::format("row-count mismatch: {} has {} rows, {} has {}", x_path.string(), data.X.rows(),
                                 y_path.string(), data.Y.rows()));
  }
  if (data.X.rows() < 2) throw InputError("need at least two observations");
  offsets = center_columns(data.Y);
  x_offsets = center_columns(data.X);
  data.centered = true;
  return data;
}

json input_record(const fs::path& path) {
  return json{{"path", path.string()}, {"sha256", io::sha256_file(path)}};
}

void write_selection_artifacts(const fs::path& out, const PostprocessResult& post) {
  json selection{{"selected", post.sparse.selected}, {"mu", vector_json(post.sparse.mu)}};
  write_json(out / "selection.json", selection);
  json rank{{"rank_hat", post.rank.rank_hat},
            {"omega", post.rank.omega},
            {"singular_values", vector_json(post.rank.singular_values)}};
  write_json(out / "rank.json", rank);
  io::write_atomic(out / "C_R.csv", io::to_csv(post.sparse.C_R));
  io::write_atomic(out / "C_RR.csv", io::to_csv(post.bsml.C_RR));
}

void print_postprocess_summary(const PostprocessResult& post) {
  std::cout << fmt::format("selected {} of {} predictors; estimated rank {} (omega = {:.6g})\n",
                           post.sparse.selected.size(), post.sparse.C_R.rows(), post.rank.rank_hat, post.rank.omega);
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string x_csv;
  std::string y_csv;
  std::string config_json;
  std::string out_dir;
  ChainFlags flags;
};

void cmd_fit(const FitArgs& args) {
  const auto wall = Clock::now();
  VectorXd offsets;
  VectorXd x_offsets;
  const Dataset data = load_dataset(args.x_csv, args.y_csv, offsets, x_offsets);

  GibbsConfig config;
  json inputs{{"x", input_record(args.x_csv)}, {"y", input_record(args.y_csv)}};
  if (!args.config_json.empty()) {
    config = gibbs_from_json(read_json_file(args.config_json), config, "config");
    inputs["config"] = input_record(args.config_json);
  }
  args.flags.apply(config);
  validate_config(config, data.q(), "config");

  const ChainResult chain = run_chain(data, config);
  const PosteriorSummary& summary = chain.summary;
  const PostprocessResult post = postprocess(summary.C_mean, data.X, data.Y);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  io::write_atomic(out / "C_mean.csv", io::to_csv(summary.C_mean));
  io::write_atomic(out / "C_lo.csv", io::to_csv(summary.C_lo));
  io::write_atomic(out / "C_hi.csv", io::to_csv(summary.C_hi));
  write_selection_artifacts(out, post);

  std::string intervals = "row,col,mean,lo,hi\n";
  for (Index j = 0; j < summary.C_mean.rows(); ++j) {
    for (Index h = 0; h < summary.C_mean.cols(); ++h) {
      intervals += fmt::format("{},{},{},{},{}\n", j, h, io::format_double(summary.C_mean(j, h)),
                               summary.C_lo.size() ? io::format_double(summary.C_lo(j, h)) : "",
                               summary.C_hi.size() ? io::format_double(summary.C_hi(j, h)) : "");
    }
  }
  io::write_atomic(out / "intervals.csv", intervals);

  if (config.store_draws && !summary.draws.empty()) {
    write_json(out / "selection_frequency.json",
               json{{"frequency", vector_json(selection_frequency(summary.draws, data.X))},
                    {"draws", summary.draws.size()}});
  }

  const auto& d = chain.diagnostics;
  json manifest{
      {"command", "fit"},
      {"version", BSML_VERSION},
      {"config", gibbs_to_json(config)},
      {"seed", config.seed},
      {"inputs", inputs},
      {"centering_offsets", vector_json(offsets)},
      {"predictor_offsets", vector_json(x_offsets)},
      {"kept_draws", summary.kept},
      {"shapes",
       {{"X", shape_json(data.X)},
        {"Y", shape_json(data.Y)},
        {"C_mean", shape_json(summary.C_mean)},
        {"C_lo", shape_json(summary.C_lo)},
        {"C_hi", shape_json(summary.C_hi)},
        {"C_R", shape_json(post.sparse.C_R)},
        {"C_RR", shape_json(post.bsml.C_RR)}}},
      {"timing_seconds",
       {{"B", d.seconds_B}, {"A", d.seconds_A}, {"noise", d.seconds_noise}, {"scales", d.seconds_scales}}},
      {"wall_seconds", std::chrono::duration<double>(Clock::now() - wall).count()},
  };
  write_json(out / "manifest.json", manifest);

  std::cout << fmt::format("fit: n={} p={} q={} rank bound {} | {} sweeps, {} kept\n", data.n(), data.p(), data.q(),
                           config.effective_rank_bound(data.q()), config.iterations, summary.kept);
  print_postprocess_summary(post);
  std::cout << "artifacts written to " << out.string() << "\n";
}

// ---------------------------------------------------------------------------
// postprocess

struct PostArgs {
  std::string c_mean_csv;
  std::string x_csv;
  std::string y_csv;
  std::string out_dir;
};

void cmd_postprocess(const PostArgs& args) {
  VectorXd offsets;
  VectorXd x_offsets;
  const Dataset data = load_dataset(args.x_csv, args.y_csv, offsets, x_offsets);
  const MatrixXd c_mean = io::read_csv(args.c_mean_csv).values;
  if (c_mean.rows() != data.p() || c_mean.cols() != data.q()) {
    throw InputError(fmt::format("shape mismatch: C_mean is {}x{}, expected {}x{} from X and Y", c_mean.rows(),
                                 c_mean.cols(), data.p(), data.q()));
  }
  const PostprocessResult post = postprocess(c_mean, data.X, data.Y);
  const fs::path out(args.out_dir);
  fs::create_directories(out);
  write_selection_artifacts(out, post);
  write_json(out / "manifest.json",
             json{{"command", "postprocess"},
                  {"version", BSML_VERSION},
                  {"inputs",
                   {{"c_mean", input_record(args.c_mean_csv)},
                    {"x", input_record(args.x_csv)},
                    {"y", input_record(args.y_csv)}}},
                  {"centering_offsets", vector_json(offsets)},
                  {"predictor_offsets", vector_json(x_offsets)}});
  print_postprocess_summary(post);
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchArgs {
  std::string spec_json;
  std::string preset;
  std::string out_dir;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  ChainFlags flags;
};

json summary_json(const MetricSummary& s) { return json{{"mean", s.mean}, {"se", s.se}, {"count", s.count}}; }

std::string optional_cell(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

void cmd_benchmark(const BenchArgs& args) {
  const auto wall = Clock::now();
  BenchmarkPlan plan;
  json inputs = json::object();
  if (!args.spec_json.empty()) {
    json j = read_json_file(args.spec_json);
    if (!args.preset.empty() && !j.contains("preset")) j["preset"] = args.preset;
    plan = benchmark_from_json(j);
    inputs["spec"] = input_record(args.spec_json);
  } else if (!args.preset.empty()) {
    plan = benchmark_preset(args.preset);
  } else {
    throw InputError("benchmark: provide --spec and/or --preset");
  }
  args.flags.apply(plan.gibbs);
  if (args.replicates) plan.replicates = *args.replicates;
  if (args.threads) plan.threads = *args.threads;
  if (plan.replicates < 1) throw InputError("replicates: must be at least 1");
  try {
    plan.simulation.validate();
  } catch (const ContractError& e) {
    throw InputError(std::string("simulation: ") + e.what());
  }
  validate_config(plan.gibbs, plan.simulation.q, "gibbs");
  for (const Index k : plan.rank_grid) {
    if (k < 1 || k > plan.simulation.q) throw InputError("rank_grid: entries must lie in [1, q]");
  }

  const StudyResult study = run_study(plan.simulation, plan.replicates, plan.gibbs, plan.rank_grid, plan.threads);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  std::string csv = "rank_bound,replicate,status,mse,mspe,rank_hat,sensitivity,specificity,posterior_mean_mspe,error\n";
  json seconds = json::array();
  for (const auto& row : study.rows) {
    const auto& m = row.metrics;
    std::string error = row.error;
    for (char& c : error) {
      if (c == ',' || c == '\n') c = ';';
    }
    csv += row.failed ? fmt::format("{},{},failed,,,,,,,{}\n", row.rank_bound, row.replicate, error)
                      : fmt::format("{},{},ok,{},{},{},{},{},{},\n", row.rank_bound, row.replicate,
                                    io::format_double(m.mse), io::format_double(m.mspe), m.rank_hat,
                                    optional_cell(m.sensitivity), optional_cell(m.specificity),
                                    io::format_double(row.posterior_mean_mspe));
    seconds.push_back(row.seconds);
  }
  io::write_atomic(out / "results.csv", csv);

  json aggregates = json::array();
  for (const auto& a : study.aggregates) {
    aggregates.push_back(json{{"rank_bound", a.rank_bound},
                              {"succeeded", a.succeeded},
                              {"failed", a.failed},
                              {"mse", summary_json(a.mse)},
                              {"mspe", summary_json(a.mspe)},
                              {"rank_hat", summary_json(a.rank_hat)},
                              {"sensitivity", summary_json(a.sensitivity)},
                              {"specificity", summary_json(a.specificity)},
                              {"posterior_mean_mspe", summary_json(a.posterior_mean_mspe)}});
  }
  write_json(out / "aggregate.json", json{{"plan", benchmark_to_json(plan)}, {"aggregates", aggregates}});

  if (!plan.rank_grid.empty()) {
    std::string fig = "rank_bound,metric,mean,se,count\n";
    for (const auto& a : study.aggregates) {
      const std::pair<const char*, const MetricSummary*> metrics[] = {{"sensitivity", &a.sensitivity},
                                                                      {"specificity", &a.specificity},
                                                                      {"rank_hat", &a.rank_hat},
                                                                      {"mse", &a.mse},
                                                                      {"mspe", &a.mspe}};
      for (const auto& [name, s] : metrics) {
        fig += fmt::format("{},{},{},{},{}\n", a.rank_bound, name, io::format_double(s->mean),
                           io::format_double(s->se), s->count);
      }
    }
    io::write_atomic(out / "rank_grid.csv", fig);
  }

  write_json(out / "manifest.json",
             json{{"command", "benchmark"},
                  {"version", BSML_VERSION},
                  {"plan", benchmark_to_json(plan)},
                  {"inputs", inputs},
                  {"replicate_seconds", seconds},
                  {"wall_seconds", std::chrono::duration<double>(Clock::now() - wall).count()}});

  std::cout << fmt::format("benchmark: n={} p={} q={} r0={} s={} design={} noise={} | {} replicates\n",
                           plan.simulation.n, plan.simulation.p, plan.simulation.q, plan.simulation.r0,
                           plan.simulation.s, to_string(plan.simulation.design), to_string(plan.simulation.noise),
                           plan.replicates);
  std::cout << "rank_bound  ok/fail   r_hat         MSE(x1e-4)      MSPE            sens    spec\n";
  for (const auto& a : study.aggregates) {
    std::cout << fmt::format("{:>10}  {:>2}/{:<4}  {:.2f}+-{:.2f}  {:.2f}+-{:.2f}  {:.3f}+-{:.3f}  {:.3f}  {:.3f}\n",
                             a.rank_bound, a.succeeded, a.failed, a.rank_hat.mean, a.rank_hat.se, a.mse.mean * 1e4,
                             a.mse.se * 1e4, a.mspe.mean, a.mspe.se, a.sensitivity.mean, a.specificity.mean);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config (de)serialization

GibbsConfig gibbs_from_json(const json& j, GibbsConfig c, const std::string& where) {
  reject_unknown(j,
                 {"iterations", "burn_in", "thin", "alpha", "rank_bound", "noise_model", "seed", "store_draws",
                  "credible_level", "interval_reservoir"},
                 where);
  if (j.contains("iterations")) c.iterations = count_field(j, "iterations", where);
  if (j.contains("burn_in")) c.burn_in = count_field(j, "burn_in", where);
  if (j.contains("thin")) c.thin = count_field(j, "thin", where);
  if (j.contains("alpha")) c.alpha = field<double>(j, "alpha", where);
  if (j.contains("rank_bound")) c.rank_bound = static_cast<Index>(count_field(j, "rank_bound", where));
  if (j.contains("noise_model")) {
    try {
      c.noise_model = noise_model_from_string(field<std::string>(j, "noise_model", where));
    } catch (const ContractError& e) {
      throw InputError(where + ".noise_model: " + e.what());
    }
  }
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", where);
  if (j.contains("store_draws")) c.store_draws = field<bool>(j, "store_draws", where);
  if (j.contains("credible_level")) c.credible_level = field<double>(j, "credible_level", where);
  if (j.contains("interval_reservoir")) c.interval_reservoir = count_field(j, "interval_reservoir", where);
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw InputError(where + ".alpha: must lie in (0, 1]");
  if (c.thin < 1) throw InputError(where + ".thin: must be at least 1");
  if (c.burn_in >= c.iterations) throw InputError(where + ".burn_in: must be smaller than iterations");
  if (!(c.credible_level > 0.0 && c.credible_level < 1.0)) {
    throw InputError(where + ".credible_level: must lie in (0, 1)");
  }
  return c;
}

json gibbs_to_json(const GibbsConfig& c) {
  return json{{"iterations", c.iterations},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"alpha", c.alpha},
              {"rank_bound", c.rank_bound},
              {"noise_model", to_string(c.noise_model)},
              {"seed", c.seed},
              {"store_draws", c.store_draws},
              {"credible_level", c.credible_level},
              {"interval_reservoir", c.interval_reservoir}};
}

SimulationSpec simulation_from_json(const json& j, SimulationSpec s, const std::string& where) {
  reject_unknown(j, {"n", "p", "q", "r0", "s", "design", "noise", "rho", "noise_lo", "noise_hi", "seed"}, where);
  if (j.contains("n")) s.n = static_cast<Index>(count_field(j, "n", where));
  if (j.contains("p")) s.p = static_cast<Index>(count_field(j, "p", where));
  if (j.contains("q")) s.q = static_cast<Index>(count_field(j, "q", where));
  if (j.contains("r0")) s.r0 = static_cast<Index>(count_field(j, "r0", where));
  if (j.contains("s")) s.s = static_cast<Index>(count_field(j, "s", where));
  try {
    if (j.contains("design")) s.design = design_kind_from_string(field<std::string>(j, "design", where));
    if (j.contains("noise")) s.noise = noise_design_from_string(field<std::string>(j, "noise", where));
  } catch (const ContractError& e) {
    throw InputError(where + ": " + e.what());
  }
  if (j.contains("rho")) s.rho = field<double>(j, "rho", where);
  if (j.contains("noise_lo")) s.noise_lo = field<double>(j, "noise_lo", where);
  if (j.contains("noise_hi")) s.noise_hi = field<double>(j, "noise_hi", where);
  if (j.contains("seed")) s.seed = field<std::uint64_t>(j, "seed", where);
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw InputError(where + ": " + e.what());
  }
  return s;
}

json simulation_to_json(const SimulationSpec& s) {
  return json{{"n", s.n},         {"p", s.p},         {"q", s.q},
              {"r0", s.r0},       {"s", s.s},         {"design", to_string(s.design)},
              {"noise", to_string(s.noise)},          {"rho", s.rho},
              {"noise_lo", s.noise_lo},               {"noise_hi", s.noise_hi},
              {"seed", s.seed}};
}

BenchmarkPlan benchmark_preset(const std::string& name) {
  BenchmarkPlan plan;
  plan.simulation.n = 100;
  plan.simulation.r0 = 3;
  plan.simulation.s = 10;
  plan.gibbs.iterations = 2000;
  plan.gibbs.burn_in = 1000;
  plan.gibbs.interval_reservoir = 0;
  if (name == "independent-200x30") {
    plan.simulation.p = 200;
    plan.simulation.q = 30;
    plan.replicates = 10;
  } else if (name == "independent-500x10") {
    plan.simulation.p = 500;
    plan.simulation.q = 10;
    plan.replicates = 5;
  } else if (name == "rank-grid-1000x12") {
    plan.simulation.p = 1000;
    plan.simulation.q = 12;
    plan.replicates = 3;
    plan.rank_grid = {3, 4, 5, 6, 7, 8, 9};
  } else if (name == "compound-noise-500x10") {
    plan.simulation.p = 500;
    plan.simulation.q = 10;
    plan.simulation.noise = NoiseDesign::kCompound;
    plan.gibbs.noise_model = NoiseModel::kInverseWishart;
    plan.replicates = 5;
  } else {
    throw InputError("preset: unknown preset '" + name + "' (independent-200x30, independent-500x10, rank-grid-1000x12, compound-noise-500x10)");
  }
  return plan;
}

BenchmarkPlan benchmark_from_json(const json& j) {
  reject_unknown(j, {"preset", "simulation", "gibbs", "replicates", "rank_grid", "threads"}, "spec");
  BenchmarkPlan plan;
  if (j.contains("preset")) plan = benchmark_preset(field<std::string>(j, "preset", "spec"));
  if (j.contains("simulation")) plan.simulation = simulation_from_json(j.at("simulation"), plan.simulation);
  if (j.contains("gibbs")) plan.gibbs = gibbs_from_json(j.at("gibbs"), plan.gibbs);
  if (j.contains("replicates")) plan.replicates = count_field(j, "replicates", "spec");
  if (j.contains("threads")) plan.threads = static_cast<unsigned>(count_field(j, "threads", "spec"));
  if (j.contains("rank_grid")) {
    const json& g = j.at("rank_grid");
    if (!g.is_array()) throw InputError("spec.rank_grid: expected an array of integers");
    plan.rank_grid.clear();
    for (const auto& v : g) {
      if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw InputError("spec.rank_grid: entries must be positive integers");
      }
      plan.rank_grid.push_back(v.get<Index>());
    }
  }
  return plan;
}

json benchmark_to_json(const BenchmarkPlan& plan) {
  return json{{"simulation", simulation_to_json(plan.simulation)},
              {"gibbs", gibbs_to_json(plan.gibbs)},
              {"replicates", plan.replicates},
              {"rank_grid", plan.rank_grid},
              {"threads", plan.threads}};
}

// ---------------------------------------------------------------------------
// Entry point

int run(int argc, char** argv) {
  CLI::App app{"Bayesian sparse reduced-rank multi-response regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BSML_VERSION);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior and post-process it");
  fit_cmd->add_option("--x", fit.x_csv, "Design matrix CSV (n x p)")->required();
  fit_cmd->add_option("--y", fit.y_csv, "Response matrix CSV (n x q)")->required();
  fit_cmd->add_option("--config", fit.config_json, "JSON sampler configuration");
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->required();
  fit.flags.attach(*fit_cmd);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run the simulation study");
  bench_cmd->add_option("--spec", bench.spec_json, "JSON study specification");
  bench_cmd->add_option("--preset", bench.preset, "independent-200x30, independent-500x10, rank-grid-1000x12 or compound-noise-500x10");
  bench_cmd->add_option("--out", bench.out_dir, "Output directory")->required();
  bench_cmd->add_option("--replicates", bench.replicates, "Replicates per grid point");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (default BSML_THREADS or all cores)");
  bench.flags.attach(*bench_cmd);

  PostArgs post;
  auto* post_cmd = app.add_subcommand("postprocess", "Select rows and estimate rank from a stored posterior mean");
  post_cmd->add_option("--c-mean", post.c_mean_csv, "Posterior mean CSV (p x q)")->required();
  post_cmd->add_option("--x", post.x_csv, "Design matrix CSV")->required();
  post_cmd->add_option("--y", post.y_csv, "Response matrix CSV")->required();
  post_cmd->add_option("--out", post.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit_cmd) cmd_fit(fit);
    if (*bench_cmd) cmd_benchmark(bench);
    if (*post_cmd) cmd_postprocess(post);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ContractError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("bsml");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bsml::cli
