// ost: command-line front end. JSON results go to stdout, logs to stderr.
//
// Exit codes: 0 ok, 2 usage or invalid input, 3 numeric failure, 4 I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ost/analysis.hpp"
#include "ost/checkpoint.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"
#include "ost/evaluate.hpp"
#include "ost/exact_ot.hpp"
#include "ost/generate.hpp"
#include "ost/losses.hpp"
#include "ost/matcher.hpp"
#include "ost/sinkhorn.hpp"
#include "ost/synth.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct UsageError : ost::Error {
  using ost::Error::Error;
};

struct Globals {
  double lambda = 0.1;
  int max_iter = 100;
  double thresh = 1e-2;
  double tau = 0.01;
  std::uint64_t seed = 0;
  bool quiet = false;
  bool log_domain = false;
  bool overrelax = false;
  std::size_t jobs = 1;

  ost::SolverConfig solver() const {
    ost::SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iter = max_iter;
    cfg.thresh = thresh;
    cfg.domain = log_domain ? ost::SinkhornDomain::log : ost::SinkhornDomain::kernel;
    cfg.overrelax = overrelax;
    return cfg;
  }
};

Globals g;

void log(const std::string& msg) {
  if (!g.quiet) std::cerr << "ost: " << msg << '\n';
}

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }
void emit(const std::string& text) { std::cout << text << '\n'; }

json plan_json(const ost::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (double v : m.row(i)) r.push_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

ost::CostMatrix load_cost(const std::string& path) {
  return ost::CostMatrix(ost::read_embed_matrix(path).values());
}

// gen ----------------------------------------------------------------------

struct GenArgs {
  std::string classes;
  std::size_t n = 4;
  std::size_t n_temporal = 0;
  std::string out;
  std::string cache;
  bool mock = false;
  std::string template_version{ost::kTemplateBody};
  double temperature = 0.7;
};

std::vector<std::string> read_class_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read classes file: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(b, e - b + 1));
  }
  if (names.empty()) throw UsageError("classes file is empty: " + path);
  return names;
}

int cmd_gen(const GenArgs& a) {
  const auto names = read_class_names(a.classes);
  std::unique_ptr<ost::LlmClient> client;
  ost::MockLlmClient* mock = nullptr;
  if (a.mock) {
    auto m = std::make_unique<ost::MockLlmClient>(g.seed);
    mock = m.get();
    client = std::move(m);
  } else {
    client = std::make_unique<ost::HttpChatClient>(ost::HttpChatConfig::from_env());
  }
  std::optional<ost::DescriptorCache> cache;
  if (!a.cache.empty()) cache.emplace(a.cache);

  ost::GenerationOptions opts;
  opts.template_version = a.template_version;
  opts.temperature = a.temperature;
  opts.max_in_flight = std::max<std::size_t>(1, g.jobs);
  log("generating descriptors for " + std::to_string(names.size()) + " classes with " +
      client->model_id());
  const auto bank = ost::build_bank(names, a.n, a.n_temporal ? a.n_temporal : a.n, *client,
                                    cache ? &*cache : nullptr, opts);
  ost::save_descriptor_bank(bank, a.out);

  json doc;
  doc["out"] = a.out;
  doc["classes"] = bank.classes.size();
  doc["template_version"] = bank.template_version;
  doc["model"] = client->model_id();
  if (mock) doc["llm_calls"] = mock->calls();
  emit(doc);
  return kExitOk;
}

// solve --------------------------------------------------------------------

int cmd_solve(const std::string& cost_path, const std::string& out) {
  const auto cost = load_cost(cost_path);
  const auto marg = ost::Marginals::uniform(cost.rows(), cost.cols());
  const auto plan = ost::sinkhorn_solve(cost, marg, g.solver());
  if (!plan.values.all_finite()) throw ost::NumericError("plan has non-finite entries");

  ost::write_embed_matrix(ost::EmbedMatrix(plan.values), out);
  json diag;
  diag["iterations"] = plan.state.iterations_run;
  diag["final_err"] = plan.state.final_err;
  diag["converged"] = plan.state.converged;
  diag["lambda"] = plan.lambda;
  diag["domain"] = g.log_domain ? "log" : "kernel";
  diag["omega"] = plan.state.omega;
  diag["transport_cost"] = ost::transport_cost(plan.values, cost);
  diag["max_marginal_violation"] = ost::max_marginal_violation(plan.values, marg);
  {
    std::ofstream side(out + ".json", std::ios::trunc);
    if (!side) throw ost::IoError("cannot write " + out + ".json");
    side << diag.dump(2) << '\n';
  }
  if (!plan.state.converged) {
    log("warning: not converged after " + std::to_string(plan.state.iterations_run) +
        " iterations");
  }
  emit(diag);
  return kExitOk;
}

// score / eval -------------------------------------------------------------

int cmd_score(const std::string& frames_path, const std::string& bank_path, bool t2v,
              bool with_category) {
  const auto frames = ost::read_embed_matrix(frames_path);
  const auto bank = ost::load_descriptor_bank(bank_path);
  const auto classes = ost::load_class_embeddings(bank, fs::path(bank_path).parent_path());
  ost::MatchConfig cfg;
  cfg.solver = g.solver();
  cfg.include_category_in_pool = with_category;
  ost::ClassLogits logits;
  if (t2v) {
    for (const auto& c : classes) logits.scores.push_back(ost::score_text_to_video(c, frames, cfg));
    for (std::size_t k = 1; k < logits.scores.size(); ++k) {
      if (logits.scores[k].fused > logits.scores[logits.argmax_index].fused) logits.argmax_index = k;
    }
  } else {
    logits = ost::classify(frames, classes, cfg);
  }
  emit(ost::class_logits_to_json(frames_path, logits));
  return kExitOk;
}

int cmd_eval(const std::string& manifest_path, const std::string& mode) {
  const auto manifest = ost::load_eval_manifest(manifest_path);
  ost::EvalOptions opts;
  opts.match.solver = g.solver();
  opts.jobs = g.jobs;
  const auto base = fs::path(manifest_path).parent_path();
  if (mode != "all") {
    const auto m = mode == "category" ? ost::ScoringMode::category
                   : mode == "pooled" ? ost::ScoringMode::pooled
                                      : ost::ScoringMode::od;
    const auto r = ost::zero_shot_eval(manifest, base, opts, m);
    emit(ost::eval_result_to_json(r));
    log("top1 " + mode + "=" + std::to_string(r.top1));
    return kExitOk;
  }
  const auto cmp = ost::evaluate_modes(manifest, base, opts);
  emit(ost::mode_comparison_to_json(cmp));
  log("top1 category=" + std::to_string(cmp.category.top1) +
      " pooled=" + std::to_string(cmp.pooled.top1) + " od=" + std::to_string(cmp.od.top1));
  return kExitOk;
}

// synth --------------------------------------------------------------------

int cmd_synth(ost::SynthConfig cfg, const std::string& out) {
  cfg.seed = g.seed;
  const auto b = ost::synth_benchmark(cfg, out);
  json doc;
  doc["manifest"] = b.manifest_path.string();
  doc["bank"] = b.bank_path.string();
  doc["n_items"] = b.manifest.items.size();
  doc["seed"] = cfg.seed;
  emit(doc);
  return kExitOk;
}

// density ------------------------------------------------------------------

int cmd_density(const std::string& emb, const std::string& category,
                const std::string& descriptors) {
  if (!emb.empty()) {
    emit(ost::density_report_to_json(ost::mean_pairwise_cosine(ost::read_embed_matrix(emb))));
    return kExitOk;
  }
  if (category.empty() || descriptors.empty()) {
    throw UsageError("density needs --emb, or both --category and --descriptors");
  }
  const auto d = ost::density_delta(ost::read_embed_matrix(category),
                                    ost::read_embed_matrix(descriptors));
  json doc;
  doc["before"] = d.before;
  doc["after"] = d.after;
  doc["delta"] = d.after - d.before;
  emit(doc);
  return kExitOk;
}

// ensemble -----------------------------------------------------------------

int cmd_ensemble(const std::string& a, const std::string& b, double alpha, bool swap,
                 const std::string& out) {
  auto pre = ost::read_checkpoint(a);
  auto fine = ost::read_checkpoint(b);
  if (swap) {
    std::swap(pre, fine);
    alpha = 1.0 - alpha;
  }
  const auto merged = ost::weight_space_ensemble(pre, fine, alpha);
  ost::write_checkpoint(merged, out);
  json doc;
  doc["out"] = out;
  doc["alpha"] = alpha;
  doc["params"] = merged.size();
  emit(doc);
  return kExitOk;
}

// oracle -------------------------------------------------------------------

int cmd_oracle(const std::string& cost_path, bool compare) {
  const auto cost = load_cost(cost_path);
  const auto marg = ost::Marginals::uniform(cost.rows(), cost.cols());
  const auto exact = ost::exact_ot_oracle(cost, marg);
  json doc;
  doc["cost"] = exact.cost;
  doc["plan"] = plan_json(exact.plan);
  if (compare) {
    const auto plan = ost::sinkhorn_solve(cost, marg, g.solver());
    const double c = ost::transport_cost(plan.values, cost);
    doc["sinkhorn_cost"] = c;
    doc["gap"] = c - exact.cost;
    doc["sinkhorn_iterations"] = plan.state.iterations_run;
  }
  emit(doc);
  return kExitOk;
}

// loss-check ---------------------------------------------------------------

constexpr double kGradTolerance = 1e-4;

int cmd_loss_check(std::size_t batches) {
  const auto r = ost::run_gradient_check(batches, g.seed);
  json doc;
  doc["batches"] = r.batches;
  doc["max_rel_error"] = r.max_rel_error;
  doc["tolerance"] = kGradTolerance;
  doc["pass"] = r.max_rel_error < kGradTolerance;
  emit(doc);
  return r.max_rel_error < kGradTolerance ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal descriptor solver: OT-based video/descriptor matching tools"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  app.add_option("--lambda", g.lambda, "entropic regularization strength")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iter", g.max_iter, "Sinkhorn iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--thresh", g.thresh, "Sinkhorn stopping threshold")->check(CLI::PositiveNumber);
  app.add_option("--tau", g.tau, "softmax temperature")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for mock clients and generators");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--log-domain", g.log_domain, "run Sinkhorn on log potentials");
  app.add_flag("--overrelax", g.overrelax, "adaptive over-relaxed Sinkhorn updates");
  app.add_flag("-q,--quiet", g.quiet, "no log output");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a descriptor bank with an LLM");
  gen_cmd->add_option("--classes", gen.classes, "file with one class name per line")->required();
  gen_cmd->add_option("--n", gen.n, "descriptors per kind")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n-temporal", gen.n_temporal, "temporal descriptors (default --n)");
  gen_cmd->add_option("--out", gen.out, "bank JSON")->required();
  gen_cmd->add_option("--cache", gen.cache, "response cache directory");
  gen_cmd->add_flag("--mock", gen.mock, "offline deterministic client");
  gen_cmd->add_option("--template", gen.template_version, "prompt template")
      ->check(CLI::IsMember({std::string(ost::kTemplateBody), std::string(ost::kTemplateSupp)}));
  gen_cmd->add_option("--temperature", gen.temperature)->check(CLI::Range(0.0, 2.0));

  std::string cost_path;
  std::string out_path;
  auto* solve_cmd = app.add_subcommand("solve", "solve entropic OT for a cost matrix");
  solve_cmd->add_option("--cost", cost_path, "OSTE cost matrix, entries in [0, 2]")->required();
  solve_cmd->add_option("--out", out_path, "OSTE plan; diagnostics go to <out>.json")->required();

  std::string frames_path;
  std::string bank_path;
  bool t2v = false;
  bool with_category = false;
  auto* score_cmd = app.add_subcommand("score", "score one video against every bank class");
  score_cmd->add_option("--frames", frames_path, "OSTE frame embeddings")->required();
  score_cmd->add_option("--bank", bank_path, "bank JSON with embedding refs")->required();
  score_cmd->add_flag("--t2v", t2v, "text-to-video transport direction");
  score_cmd->add_flag("--with-category", with_category, "pool the category embedding too");

  std::string manifest_path;
  std::string mode = "all";
  auto* eval_cmd = app.add_subcommand("eval", "zero-shot evaluation over a manifest");
  eval_cmd->add_option("--manifest", manifest_path)->required();
  eval_cmd->add_option("--mode", mode)->check(CLI::IsMember({"all", "category", "pooled", "od"}));

  ost::SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a planted synthetic benchmark");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--classes", synth.n_classes)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--items", synth.items_per_class)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth.dim)->check(CLI::Range(2, 1 << 16));
  synth_cmd->add_option("--noise-frames", synth.noise_frames)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--noise-desc", synth.noise_desc)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--frames", synth.frames_per_item)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--descriptors", synth.descriptors_per_class)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--category-signal", synth.category_signal)
      ->check(CLI::NonNegativeNumber);

  std::string emb;
  std::string category;
  std::string descriptors;
  auto* density_cmd = app.add_subcommand("density", "mean pairwise cosine of embeddings");
  density_cmd->add_option("--emb", emb, "OSTE rows to measure");
  density_cmd->add_option("--category", category, "OSTE category embeddings (before)");
  density_cmd->add_option("--descriptors", descriptors, "OSTE pooled descriptors (after)");

  std::string ckpt_a;
  std::string ckpt_b;
  double alpha = 0.5;
  bool swap = false;
  auto* ens_cmd = app.add_subcommand("ensemble", "blend two checkpoints: alpha*a + (1-alpha)*b");
  ens_cmd->add_option("--a", ckpt_a, "pretrained OSTP")->required();
  ens_cmd->add_option("--b", ckpt_b, "fine-tuned OSTP")->required();
  ens_cmd->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  ens_cmd->add_option("--out", out_path)->required();
  ens_cmd->add_flag("--swap", swap, "exchange a and b (alpha becomes 1 - alpha)");

  bool compare = false;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact OT for a small cost matrix");
  oracle_cmd->add_option("--cost", cost_path)->required();
  oracle_cmd->add_flag("--compare", compare, "also run Sinkhorn and report the gap");

  std::size_t batches = 50;
  auto* loss_cmd = app.add_subcommand("loss-check", "analytic vs finite-difference gradients");
  loss_cmd->add_option("--batches", batches)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*solve_cmd) return cmd_solve(cost_path, out_path);
    if (*score_cmd) return cmd_score(frames_path, bank_path, t2v, with_category);
    if (*eval_cmd) return cmd_eval(manifest_path, mode);
    if (*synth_cmd) return cmd_synth(synth, synth_out);
    if (*density_cmd) return cmd_density(emb, category, descriptors);
    if (*ens_cmd) return cmd_ensemble(ckpt_a, ckpt_b, alpha, swap, out_path);
    if (*oracle_cmd) return cmd_oracle(cost_path, compare);
    if (*loss_cmd) return cmd_loss_check(batches);
  } catch (const UsageError& e) {
    std::cerr << "ost: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ost::IoError& e) {
    std::cerr << "ost: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ost::FormatError& e) {
    std::cerr << "ost: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ost::TransportError& e) {
    std::cerr << "ost: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ost::DimensionError& e) {
    std::cerr << "ost: error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ost::ValidationError& e) {
    std::cerr << "ost: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ost::ConfigError& e) {
    std::cerr << "ost: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ost::Error& e) {
    std::cerr << "ost: error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "ost: internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
