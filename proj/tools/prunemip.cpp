#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "prunemip/bounds.hpp"
#include "prunemip/config.hpp"
#include "prunemip/data.hpp"
#include "prunemip/error.hpp"
#include "prunemip/experiment.hpp"
#include "prunemip/kernels.hpp"
#include "prunemip/milp.hpp"
#include "prunemip/network.hpp"
#include "prunemip/prune.hpp"
#include "prunemip/solve.hpp"
#include "prunemip/train.hpp"

using namespace prunemip;

namespace {

enum Exit { kOk = 0, kBadArgs = 2, kBadInput = 3, kTimeLimit = 4, kInternal = 5 };

struct Opts {
  // gen-data
  std::string function = "peaks";
  std::size_t n = 5000, test_n = 500;
  std::vector<double> box;
  std::uint64_t seed = 0;
  std::string data_out = "data.csv", test_out = "test.csv";
  // datasets
  std::string data;
  std::vector<std::string> inputs{"x0", "x1"}, targets{"y0"};
  double val_fraction = 0.2;
  // training
  std::string arch = "2-16-16-1";
  TrainConfig train;
  bool scale = false;
  std::string history;
  // pruning
  std::string method = "weight";
  double sparsity = 0.8, rate = 0.25;
  bool fine_tune = false, no_retrain = false;
  int fine_tune_epochs = -1;
  std::string iterations_csv;
  // models
  std::string net = "net.json", out;
  std::string problem;
  std::string summary, mps, lp;
  double time_limit = 300.0, gap = 1e-6;
  std::string log, stats;
  std::string config, output;
  std::string kernels;
};

Box resolveBox(const Opts& o, const MaskedNetwork& net, const ProblemSpec& problem) {
  Box box;
  const std::size_t d = net.inputDim();
  if (o.box.size() == 2) {
    box = Box::uniform(d, o.box[0], o.box[1]);
  } else if (o.box.size() == 2 * d) {
    for (std::size_t i = 0; i < d; ++i) {
      box.lo.push_back(o.box[2 * i]);
      box.hi.push_back(o.box[2 * i + 1]);
    }
  } else if (o.box.empty() && net.inputScaling()) {
    box.lo = net.inputScaling()->lo;
    box.hi = net.inputScaling()->hi;
  } else if (o.box.empty() && problem.input_bounds.size() >= d) {
    box = Box::uniform(d, 0.0, 0.0);
  } else {
    throw Error(ErrorKind::InvalidInput, "--box needs 2 or 2*input_dim numbers");
  }
  box = problem.applyBounds(box);
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (!(box.lo[i] <= box.hi[i])) throw Error(ErrorKind::InvalidDomain, "input box has lo > hi");
  }
  return box;
}

ProblemSpec loadProblem(const Opts& o) {
  return o.problem.empty() ? ProblemSpec::minimizeOutput(0) : loadProblemSpec(o.problem);
}

std::pair<Dataset, Dataset> loadTrainVal(const Opts& o) {
  if (o.data.empty()) throw Error(ErrorKind::InvalidInput, "--data is required");
  const Dataset ds = loadCsv(o.data, o.inputs, o.targets);
  return splitDataset(ds, 1.0 - o.val_fraction, o.seed);
}

int cmdGenData(const Opts& o) {
  if (o.function != "peaks") throw Error(ErrorKind::InvalidInput, "unknown function '" + o.function + "'");
  if (o.n == 0 || o.test_n == 0) throw Error(ErrorKind::InvalidInput, "--n and --test-n must be positive");
  const std::vector<double> b = o.box.empty() ? std::vector<double>{-3.0, 3.0} : o.box;
  if (b.size() != 2) throw Error(ErrorKind::InvalidInput, "--box needs two numbers");
  const Box box = Box::uniform(2, b[0], b[1]);
  saveCsv(makePeaksDataset(o.n, box, o.seed), o.data_out);
  saveCsv(makePeaksDataset(o.test_n, box, o.seed + 0x9e3779b97f4a7c15ULL), o.test_out);
  std::cout << "wrote " << o.n << " rows to " << o.data_out << " and " << o.test_n << " rows to " << o.test_out
            << "\n";
  return kOk;
}

int cmdTrain(const Opts& o) {
  auto [train, val] = loadTrainVal(o);
  MaskedNetwork net(parseArchitecture(o.arch));
  if (net.inputDim() != train.inputs.cols || net.outputDim() != train.targets.cols) {
    throw Error(ErrorKind::InvalidInput, "architecture does not match the data columns");
  }
  if (o.scale) {
    AffineScaling in{train.box.lo, train.box.hi}, out;
    for (std::size_t c = 0; c < train.targets.cols; ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Dataset* d : {&train, &val}) {
        for (std::size_t r = 0; r < d->targets.rows; ++r) {
          lo = std::min(lo, d->targets(r, c));
          hi = std::max(hi, d->targets(r, c));
        }
      }
      out.lo.push_back(lo);
      out.hi.push_back(hi > lo ? hi : lo + 1.0);
    }
    for (std::size_t i = 0; i < in.lo.size(); ++i) {
      in.lo[i] = std::min(train.box.lo[i], val.box.lo[i]);
      in.hi[i] = std::max(train.box.hi[i], val.box.hi[i]);
      if (in.hi[i] <= in.lo[i]) in.hi[i] = in.lo[i] + 1.0;
    }
    net.setInputScaling(in);
    net.setOutputScaling(out);
  }
  TrainConfig cfg = o.train;
  cfg.seed = o.seed;
  xavierInitialize(net, o.seed);
  const TrainResult r = trainToConvergence(net, train, val, cfg);
  saveNetwork(net, o.out.empty() ? "net.json" : o.out);
  if (!o.history.empty()) writeHistoryCsv(r, o.history);
  std::printf("epochs %zu best_epoch %d val_mape %.6g stopped_early %d\n", r.history.size(), r.best_epoch,
              r.best_val_mape, r.stopped_early ? 1 : 0);
  return kOk;
}

int cmdPrune(const Opts& o) {
  MaskedNetwork net = loadNetwork(o.net);
  PruneConfig pc;
  pc.method = parsePruneMethod(o.method);
  pc.final_sparsity = o.sparsity;
  pc.relative_rate = o.rate;
  pc.retrain = !o.no_retrain;
  pc.fine_tune = o.fine_tune;
  pc.fine_tune_cfg = o.train;
  pc.fine_tune_cfg.seed = o.seed + 1000;
  if (o.fine_tune_epochs >= 0) pc.fine_tune_cfg.epochs = o.fine_tune_epochs;
  TrainConfig tc = o.train;
  tc.seed = o.seed;
  Dataset train, val;
  if (pc.retrain || pc.fine_tune || !o.data.empty()) std::tie(train, val) = loadTrainVal(o);
  if (val.size() == 0) {
    val.inputs = Matrix(1, net.inputDim());
    val.targets = Matrix(1, net.outputDim(), 1.0);
  }
  const PruneResult r = iterativePrune(net, train, val, pc, tc);
  saveNetwork(net, o.out.empty() ? "pruned.json" : o.out);
  if (!o.iterations_csv.empty()) writeIterationCsv(r, o.iterations_csv);
  for (const auto& m : r.iterations) {
    std::printf("iteration %d sparsity %.6f val_mape %.6g dead_cleaned %zu\n", m.iteration, m.sparsity, m.val_mape,
                m.dead_neurons_cleaned);
  }
  std::printf("weight_sparsity %.6f node_sparsity %.6f unmasked_weights %zu\n", weightSparsity(net),
              nodeSparsity(net), net.unmaskedWeights());
  return kOk;
}

int cmdBounds(const Opts& o) {
  const MaskedNetwork net = loadNetwork(o.net);
  const ProblemSpec problem = loadProblem(o);
  const BoundsTable table = propagateIA(net, resolveBox(o, net, problem));
  writeBoundsCsv(table, o.out.empty() ? "bounds.csv" : o.out);
  const WidthSummary s = widthSummary(table);
  if (!o.summary.empty()) writeWidthSummaryCsv(s, o.summary);
  std::printf("hidden width mean %.6g median %.6g max %.6g\n", s.hidden.mean, s.hidden.median, s.hidden.max);
  for (std::size_t j = 0; j < s.layer.size(); ++j) {
    std::printf("layer %zu width mean %.6g median %.6g max %.6g\n", j + 1, s.layer[j].mean, s.layer[j].median,
                s.layer[j].max);
  }
  return kOk;
}

EncodeResult encodeFromOpts(const Opts& o, MaskedNetwork& net) {
  net = loadNetwork(o.net);
  const ProblemSpec problem = loadProblem(o);
  const Box box = resolveBox(o, net, problem);
  return encodeBigM(net, propagateIA(net, box), box, problem.objective, problem.constraints);
}

void printPresolve(const PresolveStats& p) {
  std::printf("vars %zu -> %zu  cons %zu -> %zu  ints %zu -> %zu  stably_off %zu stably_on %zu\n", p.vars_before,
              p.vars_after, p.cons_before, p.cons_after, p.ints_before, p.ints_after, p.stably_off_count,
              p.stably_on_count);
}

int cmdEncode(const Opts& o) {
  MaskedNetwork net;
  const EncodeResult enc = encodeFromOpts(o, net);
  if (o.mps.empty() && o.lp.empty()) throw Error(ErrorKind::InvalidInput, "give --mps and/or --lp");
  if (!o.mps.empty()) exportMps(enc.model, o.mps);
  if (!o.lp.empty()) exportLp(enc.model, o.lp);
  printPresolve(enc.presolve);
  return kOk;
}

int cmdSolve(const Opts& o) {
  MaskedNetwork net;
  const EncodeResult enc = encodeFromOpts(o, net);
  printPresolve(enc.presolve);
  SolveLimits limits;
  limits.time_limit = o.time_limit;
  limits.gap = o.gap;
  std::ofstream log_file;
  if (!o.log.empty()) {
    log_file.open(o.log);
    if (!log_file) throw Error(ErrorKind::Io, "cannot open " + o.log);
  }
  const SolveResult r =
      branchAndBound(enc.model, limits, o.log.empty() ? nullptr : &log_file, forwardPassHeuristic(enc.model, net));
  const SolveStats& s = r.stats;
  std::printf("status %s\n", toString(s.status));
  if (r.has_incumbent) {
    std::printf("objective %.12g\n", r.objective);
    for (std::size_t v : enc.model.meta.inputs) std::printf("%s %.12g\n", enc.model.vars[v].name.c_str(), r.x[v]);
    for (std::size_t v : enc.model.meta.outputs) std::printf("%s %.12g\n", enc.model.vars[v].name.c_str(), r.x[v]);
  }
  std::printf("bb_nodes %zu simplex_iterations %zu iterations_per_second %.6g root_gap %.6g wall_time %.6g\n",
              s.bb_nodes, s.simplex_iterations, s.iterationsPerSecond(), s.root_gap, s.wall_time);
  if (!o.stats.empty()) {
    writeSolveStatsCsv(s, r.has_incumbent ? r.objective : std::numeric_limits<double>::quiet_NaN(), o.stats);
  }
  if (s.status == SolveStatus::TimeLimit) return kTimeLimit;
  if (s.status == SolveStatus::Unbounded) return kInternal;
  return kOk;
}

int cmdExperiment(const Opts& o) {
  ExperimentSpec spec = loadExperimentSpec(o.config);
  if (!o.output.empty()) spec.output = o.output;
  const ExperimentReport report = runExperiment(spec, &std::cerr);
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += !c.error.empty();
  std::printf("cells %zu failed %zu report %s\n", report.cells.size(), failed, spec.output.string().c_str());
  return kOk;
}

void addTrainFlags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--epochs", o.train.epochs, "Maximum epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", o.train.learning_rate, "Adam learning rate");
  cmd->add_option("--batch", o.train.batch_size, "Mini-batch size");
  cmd->add_option("--l2", o.train.l2_lambda, "L2 regularisation factor");
  cmd->add_option("--patience", o.train.patience, "Early-stopping patience in epochs");
  cmd->add_option("--tolerance", o.train.early_stop_tolerance, "Minimum validation MAPE improvement");
  cmd->add_option("--mape-epsilon", o.train.mape_epsilon, "MAPE denominator floor");
}

void addDataFlags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--data", o.data, "Training CSV");
  cmd->add_option("--inputs", o.inputs, "Input column names")->delimiter(',');
  cmd->add_option("--targets", o.targets, "Target column names")->delimiter(',');
  cmd->add_option("--val-fraction", o.val_fraction, "Validation share of the data")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Random seed");
}

void addModelFlags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--net", o.net, "Network JSON")->required();
  cmd->add_option("--box", o.box, "Input box: lo hi, or lo0 hi0 lo1 hi1 ...");
  cmd->add_option("--problem", o.problem, "Problem file (objective, constraints, bounds)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pruning, bounding and MILP optimisation of ReLU network surrogates"};
  app.require_subcommand(1);
  Opts o;
  app.add_option("--kernels", o.kernels, "Kernel variant: scalar or avx2");

  auto* gen = app.add_subcommand("gen-data", "Sample a test function by Latin hypercube");
  gen->add_option("--function", o.function, "Function name (peaks)");
  gen->add_option("--n", o.n, "Training/validation rows")->check(CLI::PositiveNumber);
  gen->add_option("--test-n", o.test_n, "Test rows")->check(CLI::PositiveNumber);
  gen->add_option("--box", o.box, "Box lo hi")->expected(2);
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--out", o.data_out, "Training CSV path");
  gen->add_option("--test-out", o.test_out, "Test CSV path");

  auto* train = app.add_subcommand("train", "Train a dense ReLU network");
  addDataFlags(train, o);
  addTrainFlags(train, o);
  train->add_option("--arch", o.arch, "Layer widths, e.g. 2-16-16-1");
  train->add_flag("--scale", o.scale, "Min-max scale inputs and targets");
  train->add_option("--out", o.out, "Output network JSON");
  train->add_option("--history", o.history, "Per-epoch CSV");
  train->get_option("--data")->required();

  auto* prune = app.add_subcommand("prune", "Iterative magnitude pruning");
  addDataFlags(prune, o);
  addTrainFlags(prune, o);
  prune->add_option("--net", o.net, "Input network JSON")->required();
  prune->add_option("--method", o.method, "weight or node");
  prune->add_option("--sparsity", o.sparsity, "Final sparsity");
  prune->add_option("--rate", o.rate, "Relative pruning rate per iteration");
  prune->add_flag("--fine-tune", o.fine_tune, "Fine-tune with masks frozen after pruning");
  prune->add_option("--fine-tune-epochs", o.fine_tune_epochs, "Fine-tuning epochs");
  prune->add_flag("--no-retrain", o.no_retrain, "Prune by magnitude without retraining");
  prune->add_option("--out", o.out, "Output network JSON");
  prune->add_option("--iterations-csv", o.iterations_csv, "Per-iteration CSV");

  auto* bounds = app.add_subcommand("bounds", "Interval bounds of every neuron");
  addModelFlags(bounds, o);
  bounds->add_option("--out", o.out, "Bounds CSV");
  bounds->add_option("--summary", o.summary, "Width summary CSV");

  auto* encode = app.add_subcommand("encode", "Write the big-M MILP");
  addModelFlags(encode, o);
  encode->add_option("--mps", o.mps, "MPS output");
  encode->add_option("--lp", o.lp, "LP output");

  auto* solve = app.add_subcommand("solve", "Optimise over the network");
  addModelFlags(solve, o);
  solve->add_option("--time-limit", o.time_limit, "Seconds")->check(CLI::PositiveNumber);
  solve->add_option("--gap", o.gap, "Absolute optimality gap")->check(CLI::NonNegativeNumber);
  solve->add_option("--log", o.log, "Per-node log file");
  solve->add_option("--stats", o.stats, "Solve statistics CSV");

  auto* exp = app.add_subcommand("experiment", "Run a pruning/optimisation grid");
  exp->add_option("--config", o.config, "key=value experiment file")->required();
  exp->add_option("--output", o.output, "Report directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArgs;
  }

  try {
    if (o.kernels == "scalar") {
      kernels::select(kernels::Variant::Scalar);
    } else if (o.kernels == "avx2") {
      if (!kernels::select(kernels::Variant::Avx2)) throw Error(ErrorKind::InvalidInput, "AVX2 kernels unavailable");
    } else if (!o.kernels.empty()) {
      throw Error(ErrorKind::InvalidInput, "--kernels must be scalar or avx2");
    }
    if (*gen) return cmdGenData(o);
    if (*train) return cmdTrain(o);
    if (*prune) return cmdPrune(o);
    if (*bounds) return cmdBounds(o);
    if (*encode) return cmdEncode(o);
    if (*solve) return cmdSolve(o);
    if (*exp) return cmdExperiment(o);
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Encoding ? kInternal : kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
