#include "gmc/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "gmc/chaos.hpp"
#include "gmc/ensemble.hpp"
#include "gmc/gaussian.hpp"
#include "gmc/verify.hpp"

namespace gmc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path prepare_out_dir(const RunConfig& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("cannot create output directory '" + c.out + "'");
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << content;
  if (!os.flush()) throw ConfigError("cannot write '" + path.string() + "'");
}

std::string numbered(const std::string& stem, std::int64_t r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05lld.csv", stem.c_str(), static_cast<long long>(r));
  return buf;
}

std::string hash_comment(const RunConfig& c) { return "# config_hash=" + hex64(config_hash(c)) + "\n"; }

json seed_json(SeedRecord s) { return to_json(s); }

}  // namespace

int cmd_sample(const RunConfig& c, std::ostream& out) {
  const DomainGrid grid = make_grid(c);
  const KernelSpec spec = make_kernel(c, grid);
  const CovMatrix cov = eval_kernel(spec, grid);
  const fs::path dir = prepare_out_dir(c);
  const std::int64_t replicas = c.replicas_or(10);
  const std::int64_t exported = std::min(replicas, c.export_limit);
  const SeedRecord master = c.seed_record();
  json seeds = json::array(), files = json::array();
  for (std::int64_t r = 0; r < exported; ++r) {
    const SeedRecord s = master.child(static_cast<std::uint64_t>(r));
    const FieldSample x = sample_field(cov, s);
    std::ostringstream os;
    os << hash_comment(c) << "# replica=" << r << " seed=" << hex64(s.key) << ':' << hex64(s.stream)
       << '\n';
    write_sample_csv(os, x.values);
    const std::string name = numbered("sample", r);
    write_file(dir / name, os.str());
    seeds.push_back({{"replica", r}, {"seed", seed_json(s)}});
    files.push_back(name);
  }
  json manifest = {{"command", "sample"},
                   {"config", to_json(c)},
                   {"config_hash", hex64(config_hash(c))},
                   {"kernel", to_json(spec)},
                   {"kernel_hash", hex64(cov.id())},
                   {"grid", to_json(grid)},
                   {"jitter", cov.jitter()},
                   {"diagnostics", cov.diagnostics()},
                   {"master_seed", seed_json(master)},
                   {"replicas", replicas},
                   {"exported", exported},
                   {"seeds", seeds},
                   {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "sample: wrote " << exported << " field samples to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_chaos(const RunConfig& c, std::ostream& out) {
  const DomainGrid grid = make_grid(c);
  const KernelSpec spec = make_kernel(c, grid);
  const CovMatrix cov = eval_kernel(spec, grid);
  const fs::path dir = prepare_out_dir(c);
  const std::int64_t replicas = c.replicas_or(1000);
  const std::int64_t exported = std::min(replicas, c.export_limit);
  const SeedRecord master = c.seed_record();
  auto pairs = c.pairs;
  if (pairs.empty() && grid.size() <= 16) pairs = all_unordered_pairs(grid.size());

  json files = json::array();
  for (std::int64_t r = 0; r < exported; ++r) {
    const SeedRecord s = master.child(static_cast<std::uint64_t>(r));
    const ChaosMeasure m = build_chaos(sample_field(cov, s), cov, grid);
    std::ostringstream os;
    os << hash_comment(c) << "# replica=" << r << " seed=" << hex64(s.key) << ':' << hex64(s.stream)
       << '\n';
    write_measure_csv(os, m);
    const std::string name = numbered("chaos", r);
    write_file(dir / name, os.str());
    files.push_back(name);
  }

  struct Acc {
    RunningStats mass;
    StatsBank pair;
    std::int64_t clamped = 0;
    void merge(const Acc& o) {
      mass.merge(o.mass);
      pair.merge(o.pair);
      clamped += o.clamped;
    }
  };
  const Vector& mu = grid.cell_measure();
  const Vector var = cov.diagonal();
  const Index n = grid.size();
  const Acc acc = reduce_replicas(replicas, master, Acc{{}, StatsBank(pairs.size()), 0},
                                  [&](Acc& a, std::int64_t, SeedRecord s) {
                                    Vector latent, values, w(n);
                                    sample_into(cov, s, latent, values);
                                    a.clamped += chaos_weights(values, var, mu, 1.0, w);
                                    a.mass.add(compensated_sum(w));
                                    for (std::size_t p = 0; p < pairs.size(); ++p)
                                      a.pair[p].add(w(pairs[p].first) * w(pairs[p].second));
                                  });
  json moments = json::array();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    moments.push_back({{"i", i},
                       {"j", j},
                       {"estimate", acc.pair[p].mean()},
                       {"se", acc.pair[p].se()},
                       {"target", std::exp(cov.entries()(i, j)) * mu(i) * mu(j)}});
  }
  json summary = {{"command", "chaos"},
                  {"config", to_json(c)},
                  {"config_hash", hex64(config_hash(c))},
                  {"kernel_hash", hex64(cov.id())},
                  {"grid", to_json(grid)},
                  {"master_seed", seed_json(master)},
                  {"replicas", replicas},
                  {"exported", exported},
                  {"files", files},
                  {"total_measure", grid.total_measure()},
                  {"mean_mass", acc.mass.mean()},
                  {"mean_mass_se", acc.mass.se()},
                  {"mass_variance", acc.mass.variance()},
                  {"second_moment_closed_form", second_moment_closed_form(cov.entries(), mu)},
                  {"clamped_cells", acc.clamped},
                  {"second_moments", moments}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  out << "chaos: " << replicas << " replicas, mean mass " << format_double(acc.mass.mean())
      << " (se " << format_double(acc.mass.se()) << "), wrote " << exported << " measures to "
      << dir.string() << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  SuiteConfig sc;
  sc.suites = c.suite;
  sc.replicas = c.replicas;
  sc.seed = c.seed_record();
  sc.z = c.z;
  sc.bonferroni = c.bonferroni;
  sc.grid = make_grid(c);
  sc.kernel = make_kernel(c, *sc.grid);
  const fs::path dir = prepare_out_dir(c);
  SuiteResult res = run_suite(sc);
  const std::string hash = hex64(config_hash(c));
  for (auto& r : res.reports) r.with("config_hash", hash);
  std::ostringstream jl;
  write_jsonl(jl, res.reports);
  write_file(dir / "reports.jsonl", jl.str());
  print_table(out, res.reports);
  out << "comparisons: " << res.comparisons << ", failures: " << res.failures
      << (c.bonferroni ? " (bonferroni)" : "") << '\n';
  return res.exit_code();
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  if (c.gamma_ladder.empty() && c.eps_ladder.empty())
    throw ConfigError("sweep needs a non-empty gamma ladder or eps ladder");
  const DomainGrid grid = make_grid(c);
  const fs::path dir = prepare_out_dir(c);
  const std::int64_t replicas = c.replicas_or(1000);
  const SeedRecord master = c.seed_record();
  const Vector& mu = grid.cell_measure();
  const Index n = grid.size();

  if (!c.gamma_ladder.empty()) {
    std::ostringstream os;
    os << hash_comment(c)
       << "# gamma: kernel parameter; second_moment: closed-form E M[T]^2; mean_mass, "
          "mean_mass_se: Monte Carlo E M[T]; tail_mass, tail_mass_se: E[M[T] 1{M[T] > 2}]\n"
       << "gamma,second_moment,mean_mass,mean_mass_se,tail_mass,tail_mass_se\n";
    for (std::size_t k = 0; k < c.gamma_ladder.size(); ++k) {
      const double g = c.gamma_ladder[k];
      const CovMatrix cov = eval_kernel(make_kernel(c, grid, g), grid);
      const Vector var = cov.diagonal();
      const StatsBank bank = reduce_replicas(replicas, master.child(k), StatsBank(2),
                                             [&](StatsBank& a, std::int64_t, SeedRecord s) {
                                               Vector latent, values, w(n);
                                               sample_into(cov, s, latent, values);
                                               chaos_weights(values, var, mu, 1.0, w);
                                               const double m = compensated_sum(w);
                                               a[0].add(m);
                                               a[1].add(m > 2.0 ? m : 0.0);
                                             });
      os << format_double(g) << ',' << format_double(second_moment_closed_form(cov.entries(), mu))
         << ',' << format_double(bank[0].mean()) << ',' << format_double(bank[0].se()) << ','
         << format_double(bank[1].mean()) << ',' << format_double(bank[1].se()) << '\n';
    }
    write_file(dir / "sweep_gamma.csv", os.str());
    out << "sweep: " << c.gamma_ladder.size() << " gamma rows -> "
        << (dir / "sweep_gamma.csv").string() << '\n';
  }

  if (!c.eps_ladder.empty()) {
    const CovMatrix cov = eval_kernel(make_kernel(c, grid), grid);
    const auto res = test_mollifier_independence(
        cov, grid, grid, Mollifier::from_name(c.mollifiers[0]), Mollifier::from_name(c.mollifiers[1]),
        c.eps_ladder, replicas, master.child(c.gamma_ladder.size()), c.z);
    std::ostringstream os;
    os << hash_comment(c) << "# eps: mollifier scale; distance, distance_se: E|M_" << c.mollifiers[0]
       << "[T] - M_" << c.mollifiers[1] << "[T]| with a shared fine sample\n"
       << "# mean_mass_at_last_eps=" << format_double(res.mean_mass) << '\n'
       << "eps,distance,distance_se\n";
    for (std::size_t k = 0; k < c.eps_ladder.size(); ++k)
      os << format_double(c.eps_ladder[k]) << ',' << format_double(res.distances[k]) << ','
         << format_double(res.distance_se[k]) << '\n';
    write_file(dir / "sweep_eps.csv", os.str());
    out << "sweep: " << c.eps_ladder.size() << " eps rows -> " << (dir / "sweep_eps.csv").string()
        << '\n';
  }
  return kExitOk;
}

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs = {
      {"--kernel", "kernel", "kahane | log | zero | explicit"},
      {"--C", "C", "Kahane cutoff C"},
      {"--gamma", "gamma", "kernel amplitude gamma"},
      {"--g", "g", "additive constant of the log kernel"},
      {"--matrix", "matrix", "explicit kernel rows, e.g. '1,0.2;0.2,1'"},
      {"--n", "n", "cells per axis"},
      {"--dim", "dim", "dimension"},
      {"--lo", "lo", "lower domain bound"},
      {"--hi", "hi", "upper domain bound"},
      {"--density", "density", "reference density: lebesgue | ramp"},
      {"--replicas", "replicas", "ensemble size"},
      {"--seed", "seed", "master seed key"},
      {"--stream", "stream", "master seed stream"},
      {"--suite", "suite", "comma-separated verification suites"},
      {"--mollifier", "mollifiers", "mollifier pair for the eps sweep, e.g. box,triangle"},
      {"--eps-ladder", "eps_ladder", "comma-separated decreasing eps values"},
      {"--gamma-ladder", "gamma_ladder", "comma-separated gamma values"},
      {"--out", "out", "output directory"},
      {"--z", "z", "z threshold"},
      {"--export-limit", "export_limit", "max per-replica files"},
      {"--pairs", "pairs", "cell pairs i:j for the chaos summary"}};
  return specs;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for subcritical Gaussian multiplicative chaos"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> values;
  bool bonferroni = false;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"sample", "write field samples and a manifest"},
      {"chaos", "write chaos measures and an ensemble summary"},
      {"verify", "run verification suites"},
      {"sweep", "sweep gamma or eps and tabulate statistics"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, desc] : commands) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", config_path, "JSON or key=value config file");
    for (const auto& f : flag_specs()) s->add_option(f.flag, values[f.key], f.help);
    s->add_flag("--bonferroni", bonferroni, "Bonferroni-adjust z over all comparisons");
    subs.push_back(s);
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* active = nullptr;
  std::string command;
  for (std::size_t k = 0; k < subs.size(); ++k)
    if (subs[k]->parsed()) {
      active = subs[k];
      command = commands[k].first;
    }

  try {
    std::map<std::string, std::string> flags;
    for (const auto& f : flag_specs())
      if (active->count(f.flag) > 0) flags[f.key] = values[f.key];
    if (active->count("--bonferroni") > 0) flags["bonferroni"] = bonferroni ? "true" : "false";
    json doc = config_path.empty() ? json::object() : parse_config_text(read_text(config_path));
    const RunConfig cfg = config_from_json(merge_flags(doc, flags));
    if (command == "sample") return cmd_sample(cfg, out);
    if (command == "chaos") return cmd_chaos(cfg, out);
    if (command == "verify") return cmd_verify(cfg, out);
    return cmd_sweep(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
  } catch (const NotPositiveDefinite& e) {
    err << "error: " << e.what() << " (min eigenvalue " << format_double(e.min_eigenvalue())
        << ")\n";
  }
  return kExitConfig;
}

}  // namespace gmc::cli
