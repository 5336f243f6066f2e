#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gtrws/gtrws.hpp"

namespace {

struct Options {
  std::string input;
  std::string gen;
  std::size_t width = 8, height = 8, labels = 4;
  double smooth = 15.0;
  double block_weight = 5000.0;
  std::string potts_variant = "all-equal";
  std::string unary_file;
  std::string method = "trws";
  std::size_t passes = 500;
  double eps = 1e-7;
  std::string separators = "singleton";
  std::string node_order = "input";
  std::string reuse = "none";
  double lambda = 0.0;
  std::string trace;
  std::string save_model;
  std::uint64_t seed = 1;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<gtrws::Table> read_unaries(const std::string& path, std::size_t nodes, std::size_t labels) {
  std::ifstream in(path);
  if (!in) throw gtrws::Error(gtrws::ErrorCode::InvalidArgument, "cannot open file '" + path + "': file not found");
  std::vector<gtrws::Table> out(nodes, gtrws::Table(labels));
  for (auto& t : out)
    for (double& x : t)
      if (!(in >> x)) throw gtrws::Error(gtrws::ErrorCode::ParseError, "unary file '" + path + "' is too short");
  return out;
}

gtrws::NodeOrder read_order(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw gtrws::Error(gtrws::ErrorCode::InvalidArgument, "cannot open file '" + path + "': file not found");
  std::vector<gtrws::NodeId> perm;
  gtrws::NodeId v;
  while (in >> v) perm.push_back(v);
  if (perm.size() != n) throw gtrws::Error(gtrws::ErrorCode::ParseError, "node order file '" + path + "' has the wrong length");
  return gtrws::NodeOrder::from_permutation(std::move(perm));
}

std::string verdict(bool holds) { return holds ? "holds" : "violated"; }

int run(const Options& o, bool passes_given, bool eps_given, bool lambda_given, bool reuse_given) {
  using namespace gtrws;
  if (o.input.empty() == o.gen.empty()) throw UsageError("exactly one of --input and --gen is required");
  if (lambda_given && o.method != "subgrad") throw UsageError("--lambda only applies to --method subgrad");
  if (reuse_given && o.method != "trws") throw UsageError("--reuse only applies to --method trws");
  if (!o.unary_file.empty() && o.gen.empty()) throw UsageError("--unary-file needs --gen");

  const SeparatorMode mode = o.separators == "pair" ? SeparatorMode::Pair : SeparatorMode::Singleton;
  ParsedModel pm;
  if (!o.input.empty()) {
    pm = read_model_file(o.input);
  } else {
    const std::size_t n = o.width * o.height;
    const auto unaries = o.unary_file.empty() ? std::vector<Table>{} : read_unaries(o.unary_file, n, o.labels);
    Instance inst = o.gen == "stereo"
                        ? gen_stereo_second_order(o.width, o.height, o.labels, o.smooth, o.seed, mode, unaries)
                        : gen_potts_2x2(o.width, o.height, o.labels, o.block_weight, o.seed, mode,
                                        o.potts_variant == "pairwise" ? PottsVariant::PairwiseSum : PottsVariant::AllEqual,
                                        unaries);
    pm = {std::move(inst.model), std::move(inst.js), std::nullopt};
  }
  if (!o.save_model.empty()) {
    std::ofstream out(o.save_model);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + o.save_model + "'");
    out << serialize_model(pm.model, pm.js, pm.order);
  }

  NodeOrder order = NodeOrder::identity(pm.model.node_count());
  if (o.node_order != "input") {
    order = read_order(o.node_order, pm.model.node_count());
  } else if (pm.order) {
    order = *pm.order;
  }
  ChainOptions copts;
  copts.add_missing_intersections = mode == SeparatorMode::Pair;
  const Decomposition d = build_monotonic_chains(pm.model, pm.js, order, copts);
  require_valid(d);

  StopRule rule;
  rule.max_passes = o.passes;
  rule.eps = (passes_given && !eps_given) ? -1.0 : o.eps;

  BoundTrace trace;
  Potentials theta;
  std::optional<TreeParams> params;
  const Model& m = d.model();
  if (o.method == "trws") {
    TrwsOptions topts;
    topts.reuse = o.reuse == "after" ? Reuse::After : o.reuse == "before-after" ? Reuse::BeforeAfter : Reuse::None;
    ChainTrws solver(d, topts);
    trace = run_passes(solver, rule, "trws", [&](const TraceRow& row) {
      if (solver.last_pass_ops() > solver.message_edge_count())
        throw Error(ErrorCode::InvalidArgument, "pass " + std::to_string(row.pass) + " used " +
                                                    std::to_string(solver.last_pass_ops()) + " message operations, more than |J'| = " +
                                                    std::to_string(solver.message_edge_count()));
    });
    theta = solver.theta();
    params = solver.tree_params();
  } else if (o.method == "trws-general") {
    GeneralTrws solver(d);
    trace = run_passes(solver, rule, "trws-general");
    params = solver.params();
    theta = cumulative_theta(d, *params);
  } else if (o.method == "msd") {
    Msd solver(m, d.js(), order);
    trace = run_passes(solver, rule, "msd");
    theta = solver.theta();
  } else {
    double lambda = o.lambda;
    if (!lambda_given) {
      const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
      lambda = select_lambda(d, grid, std::min<std::size_t>(o.passes, 50)).lambda;
    }
    Subgradient solver(d, lambda);
    trace = run_passes(solver, rule, "subgrad");
    params = solver.params();
    theta = cumulative_theta(d, *params);
  }

  if (!o.trace.empty()) {
    std::ofstream out(o.trace);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + o.trace + "'");
    write_trace_csv(out, trace);
  }

  const Labeling x = extract_primal(m, theta, order);
  std::cout << "method: " << o.method << '\n';
  std::cout << "passes: " << trace.size() << '\n';
  std::cout << "bound: " << detail::format_double(trace.empty() ? 0.0 : trace.back().bound) << '\n';
  std::cout << "primal energy: " << detail::format_double(energy(m, x)) << '\n';
  try {
    if (params) {
      std::cout << "ewta: " << verdict(check_ewta(d, *params).holds()) << '\n';
    } else {
      std::cout << "j-consistency: " << verdict(check_j_consistency(m, d.js().edges, theta).holds()) << '\n';
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooLarge) throw;
    std::cout << (params ? "ewta" : "j-consistency") << ": skipped (state space too large)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential tree-reweighted message passing on higher-order models"};
  Options o;
  app.add_option("--input", o.input, "HOMRF model file");
  app.add_option("--gen", o.gen, "Synthetic instance generator")->check(CLI::IsMember({"stereo", "potts2x2"}));
  app.add_option("--width", o.width, "Generated grid width");
  app.add_option("--height", o.height, "Generated grid height");
  app.add_option("--labels", o.labels, "Labels per node of generated instances");
  app.add_option("--smooth", o.smooth, "Stereo smoothness weight");
  app.add_option("--block-weight", o.block_weight, "Potts block weight");
  app.add_option("--potts-variant", o.potts_variant, "Potts block cost")->check(CLI::IsMember({"all-equal", "pairwise"}));
  app.add_option("--unary-file", o.unary_file, "Whitespace separated unary costs, node by node");
  app.add_option("--method", o.method, "Solver")->check(CLI::IsMember({"trws", "trws-general", "msd", "subgrad"}));
  auto* passes = app.add_option("--passes", o.passes, "Maximum number of passes");
  auto* eps = app.add_option("--eps", o.eps, "Relative bound change that stops the run");
  app.add_option("--separators", o.separators, "Separator family")->check(CLI::IsMember({"singleton", "pair"}));
  app.add_option("--node-order", o.node_order, "Node permutation file, or 'input' for the model's ORDER section");
  auto* reuse = app.add_option("--reuse", o.reuse, "Nested factor reuse")->check(CLI::IsMember({"none", "after", "before-after"}));
  auto* lambda = app.add_option("--lambda", o.lambda, "Subgradient step size base");
  app.add_option("--trace", o.trace, "CSV trace output");
  app.add_option("--save-model", o.save_model, "Write the instance as HOMRF text");
  app.add_option("--seed", o.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    return run(o, passes->count() > 0, eps->count() > 0, lambda->count() > 0, reuse->count() > 0);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
