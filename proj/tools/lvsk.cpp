// lvsk: leverage scores, sketching, curriculum orderings and timing grids.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lvsk/bench.hpp"
#include "lvsk/dist.hpp"
#include "lvsk/error.hpp"
#include "lvsk/figure.hpp"
#include "lvsk/leverage.hpp"
#include "lvsk/matrix.hpp"
#include "lvsk/order.hpp"
#include "lvsk/random.hpp"
#include "lvsk/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kFamilies{"countsketch", "osnap", "srht"};

// Every option of the subcommand with its effective value, so a run can be
// replayed from its metadata alone.
json flag_set(const CLI::App& sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      flags[name] = opt->get_expected_max() > 1 ? json(r) : json(r.back());
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

json base_meta(const CLI::App& sub, std::uint64_t seed) {
  return {{"command", sub.get_name()},
          {"version", lvsk::kVersion},
          {"generator", lvsk::kGeneratorName},
          {"seed", seed},
          {"memory_cap_bytes", lvsk::memory_cap()},
          {"flags", flag_set(sub)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw lvsk::Error(lvsk::ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw lvsk::Error(lvsk::ErrorKind::io, "write to '" + path.string() + "' failed");
}

lvsk::FileFormat resolve_format(const std::string& name, const fs::path& path) {
  return name == "auto" ? lvsk::format_from_extension(path) : lvsk::parse_file_format(name);
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p.replace_extension(suffix);
  return p;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 0, d = 0, rank = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out, format = "auto";
};

void run_gen(const CLI::App& sub, const GenArgs& g) {
  lvsk::SyntheticSpec spec{g.n, g.d, g.rank == 0 ? g.d : g.rank, g.noise, g.seed};
  const auto a = lvsk::gen_synthetic(spec);
  const fs::path out = g.out;
  lvsk::save_matrix(a, out, resolve_format(g.format, out));
  auto meta = base_meta(sub, g.seed);
  meta["matrix"] = {{"n", spec.n}, {"d", spec.d}, {"rank", spec.rank}, {"noise_sigma", spec.noise_sigma}};
  write_json(sibling(out, ".meta.json"), meta);
  std::cout << "wrote " << a.rows() << " x " << a.cols() << " matrix to " << out.string() << '\n';
}

struct LeverageArgs {
  std::string in, format = "auto", method = "exact", sketch = "countsketch", out, meta;
  bool header = false;
  double eps = 0.5, sv_tol = 1e-3, c = 1.0;
  std::size_t workers = 0, threads = 0, osnap_s = 0, rows = 0;
  std::uint64_t seed = 0;
};

void run_leverage(const CLI::App& sub, const LeverageArgs& l) {
  const auto method = lvsk::parse_leverage_method(l.method);
  const bool distributed = sub.count("--workers") > 0;
  if (distributed && method != lvsk::LeverageMethod::sketch &&
      method != lvsk::LeverageMethod::sketch_trunc)
    throw UsageError("--workers needs --method sketch or sketch-trunc");

  const fs::path in = l.in;
  const auto a = lvsk::load_matrix(in, resolve_format(l.format, in), {l.header});

  lvsk::SketchSpec spec;
  spec.family = lvsk::parse_sketch_family(l.sketch);
  spec.eps = l.eps;
  spec.d = a.cols();
  spec.osnap_s = l.osnap_s;
  spec.seed = l.seed;
  spec.size_constant = l.c;
  if (l.rows > 0) spec.rows_override = l.rows;

  auto meta = base_meta(sub, l.seed);
  meta["input"] = {{"path", l.in}, {"n", a.rows()}, {"d", a.cols()}};

  lvsk::LeverageResult result;
  if (distributed) {
    const double tol = method == lvsk::LeverageMethod::sketch ? 0.0 : l.sv_tol;
    auto dist = lvsk::run_distributed(a, spec, l.workers, tol, l.threads);
    meta["distributed"] = lvsk::to_json(dist.report);
    result = std::move(dist.leverage);
  } else {
    switch (method) {
      case lvsk::LeverageMethod::exact: result = lvsk::leverage_exact(a); break;
      case lvsk::LeverageMethod::oracle: result = lvsk::leverage_oracle(a); break;
      case lvsk::LeverageMethod::sketch: result = lvsk::leverage_sketched(a, spec); break;
      case lvsk::LeverageMethod::sketch_trunc:
        result = lvsk::leverage_sketched_trunc(a, spec, l.sv_tol);
        break;
    }
  }
  meta["result"] = lvsk::metadata(result);

  const fs::path out = l.out;
  lvsk::write_scores_csv(result, out);
  write_json(l.meta.empty() ? sibling(out, ".meta.json") : fs::path(l.meta), meta);
  std::cout << lvsk::to_string(result.method) << ": " << result.scores.size()
            << " scores, effective rank " << result.effective_rank << ", sum " << result.sum()
            << '\n';
}

struct OrderArgs {
  std::string scores, policy = "shuffle", out_dir = "order";
  std::uint64_t seed = 0;
  std::size_t epochs = 1, batch = 0;
};

void run_order(const CLI::App& sub, const OrderArgs& o) {
  const auto scores = lvsk::read_scores_csv(o.scores);
  const auto p = lvsk::scores_to_distribution(scores);
  const lvsk::OrderingPolicy policy{lvsk::parse_ordering_kind(o.policy), o.seed};

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  auto manifest = base_meta(sub, o.seed);
  manifest["n"] = p.size();
  manifest["policy"] = lvsk::to_string(policy.kind);
  manifest["epochs"] = json::array();
  for (std::size_t e = 0; e < o.epochs; ++e) {
    const auto plan = lvsk::make_plan(p, policy, e);
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04zu.txt", e);
    std::string text;
    for (auto i : plan.indices) text += std::to_string(i) + '\n';
    std::ofstream out(dir / name, std::ios::trunc);
    out << text;
    if (!out) throw lvsk::Error(lvsk::ErrorKind::io, "cannot write '" + (dir / name).string() + "'");
    const std::size_t batch = o.batch == 0 ? plan.indices.size() : o.batch;
    manifest["epochs"].push_back({{"epoch", e},
                                  {"file", name},
                                  {"indices", plan.indices.size()},
                                  {"batch_size", batch},
                                  {"batches", lvsk::emit_batches(plan, batch).size()}});
  }
  write_json(dir / "manifest.json", manifest);
  std::cout << "wrote " << o.epochs << " epoch file(s) to " << dir.string() << '\n';
}

struct BenchArgs {
  std::string preset, out, summary, meta;
  std::vector<std::size_t> n;
  std::size_t d = 16, rank = 0, repeats = 1;
  double noise = 0.0, c = 1.0, sv_tol = 1e-3;
  std::vector<std::string> methods;
  std::vector<double> eps;
  std::uint64_t seed = 0;
};

void run_bench_cmd(const CLI::App& sub, const BenchArgs& b) {
  lvsk::BenchScenario sc = b.preset.empty() ? lvsk::BenchScenario{} : lvsk::bench_preset(b.preset);
  auto given = [&](const char* flag) { return sub.count(flag) > 0; };
  if (given("--n")) sc.n_values = b.n;
  if (given("--d")) sc.d = b.d;
  if (given("--rank")) sc.rank = b.rank;
  if (given("--noise")) sc.noise_sigma = b.noise;
  if (given("--methods")) sc.methods = b.methods;
  if (given("--eps")) sc.eps_values = b.eps;
  if (given("--repeats")) sc.repeats = b.repeats;
  if (given("--c")) sc.size_constant = b.c;
  if (given("--sv-tol")) sc.sv_tol = b.sv_tol;
  if (given("--seed")) sc.seed = b.seed;
  if (sc.n_values.empty() || sc.methods.empty())
    throw UsageError("bench needs --preset or both --n and --methods");

  const auto records = lvsk::run_bench(sc, [](const lvsk::BenchRecord& r) {
    std::cerr << "n=" << r.n << " d=" << r.d << " " << r.method << " eps=" << r.eps
              << " rep=" << r.repeat << " " << r.seconds << "s " << r.status << '\n';
  });
  const auto summary = lvsk::summarize(records);
  const fs::path out = b.out;
  lvsk::write_bench_csv(records, out);
  lvsk::write_summary_csv(summary, b.summary.empty() ? sibling(out, ".summary.csv") : fs::path(b.summary));
  auto meta = base_meta(sub, sc.seed);
  meta["scenario"] = lvsk::to_json(sc);
  write_json(b.meta.empty() ? sibling(out, ".meta.json") : fs::path(b.meta), meta);
  for (const auto& s : summary)
    std::cout << s.n << ',' << s.d << ',' << s.method << ',' << s.eps << ',' << s.median_seconds
              << ',' << s.status << '\n';
}

struct FigureArgs {
  std::string kind = "rank_full", out, meta;
  std::vector<std::string> families{"countsketch", "srht"};
  lvsk::FigureOptions opt;
};

void run_figure(const CLI::App& sub, FigureArgs f) {
  f.opt.families.clear();
  for (const auto& name : f.families) f.opt.families.push_back(lvsk::parse_sketch_family(name));
  const auto fig = lvsk::make_figure(lvsk::parse_figure_kind(f.kind), f.opt);
  const fs::path out = f.out;
  lvsk::write_figure_csv(fig, out);
  auto meta = base_meta(sub, f.opt.seed);
  meta["figure"] = lvsk::figure_summary(fig);
  write_json(f.meta.empty() ? sibling(out, ".meta.json") : fs::path(f.meta), meta);
  for (const auto& p : fig.panels)
    std::cout << p.scenario << ' ' << lvsk::to_string(p.family) << (p.truncated ? " truncated" : "")
              << ": rank " << p.sketch_rank << "/" << p.true_rank << ", "
              << 100.0 * p.stats.fraction_within() << "% within " << fig.band << ", max rel "
              << p.stats.max_relative << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and sketched leverage scores"};
  app.set_version_flag("--version", std::string(lvsk::kVersion));
  app.set_config("--config", "", "key=value file mirroring the flags; [section] per subcommand");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Write a synthetic low-rank-plus-noise matrix");
  gen->add_option("--n", g.n, "Rows")->required();
  gen->add_option("--d", g.d, "Columns")->required();
  gen->add_option("--rank", g.rank, "Signal rank (0 = d)")->capture_default_str();
  gen->add_option("--noise", g.noise, "Noise standard deviation")->capture_default_str();
  gen->add_option("--seed", g.seed)->capture_default_str();
  gen->add_option("--out", g.out, "Output path")->required();
  gen->add_option("--format", g.format)->check(CLI::IsMember({"auto", "csv", "binary"}))->capture_default_str();

  LeverageArgs l;
  auto* lev = app.add_subcommand("leverage", "Compute leverage scores");
  lev->add_option("--in", l.in, "Input matrix")->required()->check(CLI::ExistingFile);
  lev->add_option("--format", l.format)->check(CLI::IsMember({"auto", "csv", "binary"}))->capture_default_str();
  lev->add_flag("--header", l.header, "Skip one CSV header line")->capture_default_str();
  lev->add_option("--method", l.method)
      ->check(CLI::IsMember({"exact", "sketch", "sketch-trunc", "oracle"}))
      ->capture_default_str();
  lev->add_option("--sketch", l.sketch)->check(CLI::IsMember(kFamilies))->capture_default_str();
  lev->add_option("--eps", l.eps, "Sketch distortion")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  lev->add_option("--sv-tol", l.sv_tol, "Relative singular value cutoff")->capture_default_str();
  lev->add_option("--workers", l.workers, "Run the distributed path with w workers")
      ->check(CLI::PositiveNumber);
  lev->add_option("--threads", l.threads, "Cap on concurrently computing workers (0 = none)")
      ->capture_default_str();
  lev->add_option("--seed", l.seed)->capture_default_str();
  lev->add_option("--c", l.c, "Sketch size constant")->check(CLI::PositiveNumber)->capture_default_str();
  lev->add_option("--osnap-s", l.osnap_s, "OSNAP nonzeros per column (0 = ceil(log2 d))")->capture_default_str();
  lev->add_option("--rows", l.rows, "Explicit sketch row count (0 = sizing rule)")->capture_default_str();
  lev->add_option("--out", l.out, "Scores CSV")->required();
  lev->add_option("--meta", l.meta, "Metadata JSON (default <out>.meta.json)");

  OrderArgs o;
  auto* ord = app.add_subcommand("order", "Emit per-epoch orderings from scores");
  ord->add_option("--scores", o.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  ord->add_option("--policy", o.policy)
      ->check(CLI::IsMember({"shuffle", "dec", "dec-swr", "dec_swr", "dec-swor", "dec_swor"}))
      ->capture_default_str();
  ord->add_option("--seed", o.seed)->capture_default_str();
  ord->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  ord->add_option("--batch", o.batch, "Batch size recorded in the manifest (0 = whole epoch)")
      ->capture_default_str();
  ord->add_option("--out-dir", o.out_dir)->capture_default_str();

  BenchArgs b;
  auto* ben = app.add_subcommand("bench", "Time leverage computation over a grid");
  ben->add_option("--preset", b.preset)->check(CLI::IsMember({"table1", "table2", "table3", "table4", "smoke"}));
  ben->add_option("--n", b.n, "Row counts");
  ben->add_option("--d", b.d)->capture_default_str();
  ben->add_option("--rank", b.rank, "Signal rank (0 = d)")->capture_default_str();
  ben->add_option("--noise", b.noise)->capture_default_str();
  ben->add_option("--methods", b.methods)->check(CLI::IsMember({"exact", "countsketch", "osnap", "srht"}));
  ben->add_option("--eps", b.eps);
  ben->add_option("--repeats", b.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  ben->add_option("--c", b.c)->check(CLI::PositiveNumber)->capture_default_str();
  ben->add_option("--sv-tol", b.sv_tol)->capture_default_str();
  ben->add_option("--seed", b.seed)->capture_default_str();
  ben->add_option("--out", b.out, "Per-run CSV")->required();
  ben->add_option("--summary", b.summary, "Median summary CSV (default <out>.summary.csv)");
  ben->add_option("--meta", b.meta, "Metadata JSON (default <out>.meta.json)");

  FigureArgs f;
  auto* fig = app.add_subcommand("figure", "Emit scatter or spectrum data");
  fig->add_option("--kind", f.kind)
      ->check(CLI::IsMember({"rank_full", "rank_half", "trunc_fix", "spectrum"}))
      ->capture_default_str();
  fig->add_option("--n", f.opt.n)->capture_default_str();
  fig->add_option("--d", f.opt.d)->capture_default_str();
  fig->add_option("--eps", f.opt.eps)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  fig->add_option("--seed", f.opt.seed)->capture_default_str();
  fig->add_option("--families", f.families)->check(CLI::IsMember(kFamilies))->capture_default_str();
  fig->add_option("--c", f.opt.size_constant)->check(CLI::PositiveNumber)->capture_default_str();
  fig->add_option("--sv-tol", f.opt.sv_tol)->capture_default_str();
  fig->add_option("--noise-n", f.opt.noise_n)->capture_default_str();
  fig->add_option("--noise-d", f.opt.noise_d)->capture_default_str();
  fig->add_option("--noise-rank", f.opt.noise_rank)->capture_default_str();
  fig->add_option("--noise-sigma", f.opt.noise_sigma)->capture_default_str();
  fig->add_option("--out", f.out, "Output CSV")->required();
  fig->add_option("--meta", f.meta, "Summary JSON (default <out>.meta.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) run_gen(*gen, g);
    if (lev->parsed()) run_leverage(*lev, l);
    if (ord->parsed()) run_order(*ord, o);
    if (ben->parsed()) run_bench_cmd(*ben, b);
    if (fig->parsed()) run_figure(*fig, f);
  } catch (const UsageError& e) {
    std::cerr << "lvsk: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const lvsk::Error& e) {
    std::cerr << "lvsk: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lvsk: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
