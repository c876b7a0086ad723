#include "prunemip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "prunemip/error.hpp"
#include "prunemip/prune.hpp"
#include "prunemip/train.hpp"

namespace prunemip {

const char* toString(CellVariant v) {
  switch (v) {
    case CellVariant::Baseline: return "baseline";
    case CellVariant::FineTune: return "finetune";
    case CellVariant::Pure: return "pure";
  }
  return "unknown";
}

std::size_t workerCount() {
  if (const char* env = std::getenv("PRUNEMIP_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

template <typename F>
void parallelFor(std::size_t count, F&& body) {
  const std::size_t workers = std::min(workerCount(), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < count; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

struct SeedData {
  Dataset train, val, test;
  MaskedNetwork base;
  double base_train_seconds = 0.0;
  double base_test_mape = 0.0;
  std::string error;
};

struct CellPlan {
  std::size_t seed_index = 0;
  std::string method = "none";
  PruneMethod prune_method = PruneMethod::Weight;
  CellVariant variant = CellVariant::Baseline;
  double sparsity = 0.0;
};

std::string sparsityTag(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", s);
  return buf;
}

SeedData prepareSeed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedData d;
  Dataset all, test;
  if (spec.function == "peaks") {
    const Box box = Box::uniform(2, spec.box_lo, spec.box_hi);
    all = makePeaksDataset(spec.n, box, seed);
    test = makePeaksDataset(spec.test_n, box, seed + 0x9e3779b97f4a7c15ULL);
  } else {
    const Dataset full = loadCsv(spec.csv, spec.input_cols, spec.target_cols);
    auto [rest, held] = splitDataset(full, 1.0 - static_cast<double>(spec.test_n) / static_cast<double>(full.size()),
                                     seed);
    all = std::move(rest);
    test = std::move(held);
    test.box = full.box;
    all.box = full.box;
  }
  auto [tr, va] = splitDataset(all, spec.train_fraction, seed);
  d.train = std::move(tr);
  d.val = std::move(va);
  d.test = std::move(test);
  d.train.box = d.val.box = d.test.box = all.box;

  d.base = MaskedNetwork(spec.architecture);
  if (spec.scale) {
    AffineScaling in{all.box.lo, all.box.hi};
    AffineScaling out;
    for (std::size_t c = 0; c < all.targets.cols; ++c) {
      double lo = all.targets(0, c), hi = lo;
      for (std::size_t r = 0; r < all.targets.rows; ++r) {
        lo = std::min(lo, all.targets(r, c));
        hi = std::max(hi, all.targets(r, c));
      }
      if (hi == lo) hi = lo + 1.0;
      out.lo.push_back(lo);
      out.hi.push_back(hi);
    }
    d.base.setInputScaling(in);
    d.base.setOutputScaling(out);
  }
  xavierInitialize(d.base, seed);
  TrainConfig cfg = spec.train;
  cfg.seed = seed;
  const auto t0 = Clock::now();
  trainToConvergence(d.base, d.train, d.val, cfg);
  d.base_train_seconds = secondsSince(t0);
  d.base_test_mape = mape(d.test.targets, predict(d.base, d.test.inputs), spec.report_mape_epsilon);
  return d;
}

void runCell(const ExperimentSpec& spec, const ProblemSpec& problem, const SeedData& data, const CellPlan& plan,
             std::uint64_t seed, CellResult& cell) {
  MaskedNetwork net = data.base;
  cell.train_seconds = data.base_train_seconds;
  if (plan.variant != CellVariant::Baseline) {
    PruneConfig pc;
    pc.method = plan.prune_method;
    pc.final_sparsity = plan.sparsity;
    pc.relative_rate = spec.relative_rate;
    pc.retrain = plan.variant == CellVariant::FineTune;
    pc.fine_tune = plan.variant == CellVariant::FineTune;
    pc.fine_tune_cfg = spec.fine_tune_cfg;
    pc.fine_tune_cfg.seed = seed + 1000;
    TrainConfig tc = spec.retrain_cfg;
    tc.seed = seed + 100;
    const auto t0 = Clock::now();
    const PruneResult pr = iterativePrune(net, data.train, data.val, pc, tc);
    cell.train_seconds += secondsSince(t0);
    writeIterationCsv(pr, cell.dir / "prune_iterations.csv");
    for (const auto& m : pr.iterations) cell.dead_cleaned += m.dead_neurons_cleaned;
  }
  cell.weight_sparsity = weightSparsity(net);
  cell.node_sparsity = nodeSparsity(net);
  cell.test_mape = mape(data.test.targets, predict(net, data.test.inputs), spec.report_mape_epsilon);
  cell.mape_increase = cell.test_mape - data.base_test_mape;
  saveNetwork(net, cell.dir / "net.json");

  const Box box = problem.applyBounds(data.test.box);
  const BoundsTable table = propagateIA(net, box);
  writeBoundsCsv(table, cell.dir / "bounds.csv");
  cell.widths = widthSummary(table);
  writeWidthSummaryCsv(cell.widths, cell.dir / "width_summary.csv");

  EncodeResult enc = encodeBigM(net, table, box, problem.objective, problem.constraints);
  cell.presolve = enc.presolve;
  exportMps(enc.model, cell.dir / "model.mps");

  std::ofstream log(cell.dir / "solve.log");
  const auto t0 = Clock::now();
  const SolveResult sol = branchAndBound(enc.model, spec.limits, &log, forwardPassHeuristic(enc.model, net));
  cell.solve_seconds = secondsSince(t0);
  cell.stats = sol.stats;
  cell.status = toString(sol.stats.status);
  cell.objective = sol.has_incumbent ? sol.objective : std::numeric_limits<double>::quiet_NaN();
  writeSolveStatsCsv(sol.stats, cell.objective, cell.dir / "solve_stats.csv");
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ExperimentReport runExperiment(const ExperimentSpec& spec, std::ostream* progress) {
  spec.validate();
  const ProblemSpec problem = spec.problem.empty() ? ProblemSpec::minimizeOutput(0) : loadProblemSpec(spec.problem);
  std::filesystem::create_directories(spec.output);
  std::mutex progress_mu;
  auto say = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(progress_mu);
    *progress << msg << std::endl;
  };

  std::vector<SeedData> seeds(spec.seeds.size());
  parallelFor(spec.seeds.size(), [&](std::size_t i) {
    try {
      seeds[i] = prepareSeed(spec, spec.seeds[i]);
      say("seed " + std::to_string(spec.seeds[i]) + " trained");
    } catch (const std::exception& e) {
      seeds[i].error = e.what();
      say("seed " + std::to_string(spec.seeds[i]) + " failed: " + e.what());
    }
  });

  std::vector<CellPlan> plans;
  for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
    plans.push_back({s, "none", PruneMethod::Weight, CellVariant::Baseline, 0.0});
    for (PruneMethod m : spec.methods) {
      for (double sp : spec.sparsities) {
        if (spec.fine_tune) plans.push_back({s, toString(m), m, CellVariant::FineTune, sp});
        if (spec.pure_prune) plans.push_back({s, toString(m), m, CellVariant::Pure, sp});
      }
    }
  }

  ExperimentReport report;
  report.cells.resize(plans.size());
  parallelFor(plans.size(), [&](std::size_t i) {
    const CellPlan& plan = plans[i];
    CellResult& cell = report.cells[i];
    const std::uint64_t seed = spec.seeds[plan.seed_index];
    cell.seed = seed;
    cell.method = plan.method;
    cell.variant = plan.variant;
    cell.target_sparsity = plan.sparsity;
    cell.dir = spec.output / ("seed" + std::to_string(seed) + "_" + plan.method + "_" + toString(plan.variant) + "_" +
                              sparsityTag(plan.sparsity));
    try {
      if (!seeds[plan.seed_index].error.empty()) throw Error(ErrorKind::InvalidInput, seeds[plan.seed_index].error);
      std::filesystem::create_directories(cell.dir);
      runCell(spec, problem, seeds[plan.seed_index], plan, seed, cell);
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.status = "error";
    }
    say(cell.dir.filename().string() + ": " + cell.status + " nodes=" + std::to_string(cell.stats.bb_nodes));
  });

  writeCellsCsv(report, spec.output / "cells.csv");
  writeLayerWidthsCsv(report, spec.output / "layer_widths.csv");
  writeSummaryCsv(report, spec.output / "summary.csv");
  return report;
}

namespace {

std::ofstream openCsv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.precision(12);
  return out;
}

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
  return out + "\"";
}

}  // namespace

void writeCellsCsv(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = openCsv(path);
  out << "seed,method,variant,target_sparsity,weight_sparsity,node_sparsity,test_mape,mape_increase,"
         "train_seconds,solve_seconds,status,objective,bb_nodes,simplex_iterations,iterations_per_second,"
         "root_gap,width_mean,width_median,width_max,vars_before,vars_after,cons_before,cons_after,"
         "ints_before,ints_after,stably_off,stably_on,dead_cleaned,error\n";
  for (const auto& c : report.cells) {
    out << c.seed << ',' << c.method << ',' << toString(c.variant) << ',' << c.target_sparsity << ','
        << c.weight_sparsity << ',' << c.node_sparsity << ',' << c.test_mape << ',' << c.mape_increase << ','
        << c.train_seconds << ',' << c.solve_seconds << ',' << c.status << ',' << c.objective << ','
        << c.stats.bb_nodes << ',' << c.stats.simplex_iterations << ',' << c.stats.iterationsPerSecond() << ','
        << c.stats.root_gap << ',' << c.widths.hidden.mean << ',' << c.widths.hidden.median << ','
        << c.widths.hidden.max << ',' << c.presolve.vars_before << ',' << c.presolve.vars_after << ','
        << c.presolve.cons_before << ',' << c.presolve.cons_after << ',' << c.presolve.ints_before << ','
        << c.presolve.ints_after << ',' << c.presolve.stably_off_count << ',' << c.presolve.stably_on_count << ','
        << c.dead_cleaned << ',' << csvField(c.error) << '\n';
  }
}

void writeLayerWidthsCsv(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = openCsv(path);
  out << "seed,method,variant,target_sparsity,layer,mean,median,max,count\n";
  for (const auto& c : report.cells) {
    for (std::size_t j = 0; j < c.widths.layer.size(); ++j) {
      const auto& w = c.widths.layer[j];
      out << c.seed << ',' << c.method << ',' << toString(c.variant) << ',' << c.target_sparsity << ',' << j + 1
          << ',' << w.mean << ',' << w.median << ',' << w.max << ',' << w.count << '\n';
    }
  }
}

void writeSummaryCsv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<const CellResult*>> groups;
  for (const auto& c : report.cells) {
    if (c.error.empty()) groups[{c.method, toString(c.variant), c.target_sparsity}].push_back(&c);
  }
  auto out = openCsv(path);
  out << "method,variant,target_sparsity,cells,median_test_mape,median_mape_increase,median_width,"
         "median_bb_nodes,median_root_gap,median_iterations_per_second,median_ints_after,"
         "median_int_reduction_percent,median_train_seconds,median_solve_seconds,optimal_cells\n";
  for (const auto& [key, cells] : groups) {
    auto col = [&](auto f) {
      std::vector<double> v;
      for (const auto* c : cells) v.push_back(f(*c));
      return median(std::move(v));
    };
    std::size_t optimal = 0;
    for (const auto* c : cells) optimal += c->status == "optimal";
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << cells.size() << ','
        << col([](const CellResult& c) { return c.test_mape; }) << ','
        << col([](const CellResult& c) { return c.mape_increase; }) << ','
        << col([](const CellResult& c) { return c.widths.hidden.median; }) << ','
        << col([](const CellResult& c) { return static_cast<double>(c.stats.bb_nodes); }) << ','
        << col([](const CellResult& c) { return c.stats.root_gap; }) << ','
        << col([](const CellResult& c) { return c.stats.iterationsPerSecond(); }) << ','
        << col([](const CellResult& c) { return static_cast<double>(c.presolve.ints_after); }) << ','
        << col([](const CellResult& c) {
             return PresolveStats::reductionPercent(c.presolve.ints_before, c.presolve.ints_after);
           })
        << ',' << col([](const CellResult& c) { return c.train_seconds; }) << ','
        << col([](const CellResult& c) { return c.solve_seconds; }) << ',' << optimal << '\n';
  }
}

}  // namespace prunemip
