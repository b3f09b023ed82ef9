// mobius-lab: config-driven experiment runner.
//
// Exit status: 0 ok, 2 invalid input or config, 3 a numeric check failed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "mobius/generate.hpp"
#include "mobius/heisenberg.hpp"
#include "mobius/space_io.hpp"

namespace fs = std::filesystem;
using namespace mobius;
using namespace mobius::lab;

namespace {

constexpr int kOk = 0, kInvalid = 2, kNumeric = 3;

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, const std::string& report_override) {
  const auto exp = load_experiment(config, seed);
  auto out = run_experiment(exp);
  if (!report_override.empty()) out.report_path = report_override;
  for (const auto& f : out.files) write_atomic(f.path, f.content);
  write_atomic(out.report_path, render_report(out.report, utc_timestamp()));
  for (const auto& c : out.report["checks"])
    if (!c["passed"].get<bool>())
      std::cerr << "check failed: " << c["name"].get<std::string>() << " = " << c["value"].dump() << " (want "
                << c["relation"].get<std::string>() << " " << c["limit"].dump() << ")\n";
  std::cout << out.report["kind"].get<std::string>() << ": " << (out.passed ? "ok" : "FAILED") << ", report "
            << out.report_path.string() << "\n";
  return out.passed ? kOk : kNumeric;
}

int cmd_convert(const fs::path& in, const std::string& chain, const fs::path& out, std::size_t spot,
                std::optional<std::uint64_t> seed) {
  if (!fs::exists(in)) throw ConfigError("input space not found: " + in.string());
  const auto space = read_space_csv(in);
  auto res = convert_space(space, chain, spot, seed.value_or(0));
  res.provenance["input"] = in.string();
  res.provenance["output"] = out.string();
  std::ostringstream csv;
  write_space_csv(res.space, csv);
  write_atomic(out, csv.str());
  fs::path side = out;
  side += ".provenance.json";
  write_atomic(side, res.provenance.dump(2) + "\n");
  std::cout << "wrote " << out.string() << " and " << side.string() << "\n";
  return kOk;
}

int cmd_verify(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("space not found: " + path.string());
  const auto space = read_space_csv(path);
  const auto rep = verify_extended_metric(space);
  std::cout << path.string() << ": " << space.size() << " points, K " << to_string(space.k_status());
  if (auto k = space.quasimetric_k()) std::cout << " = " << format_double(*k);
  std::cout << "\n";
  if (rep.ok) {
    std::cout << "ok\n";
    return kOk;
  }
  std::size_t shown = 0;
  for (const auto& v : rep.violations) {
    if (++shown > 20) {
      std::cout << "... " << rep.violations.size() - 20 << " more\n";
      break;
    }
    std::cout << v.describe(space) << "\n";
  }
  return kNumeric;
}

class KeyValues {
 public:
  explicit KeyValues(const std::vector<std::string>& args) {
    for (const auto& a : args) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + a + "'");
      kv_[a.substr(0, eq)] = a.substr(eq + 1);
    }
  }
  double real(const std::string& k, std::optional<double> def = {}) {
    auto it = kv_.find(k);
    if (it == kv_.end()) {
      if (!def) throw ConfigError("missing parameter " + k);
      return *def;
    }
    const std::string v = it->second;
    kv_.erase(it);
    return parse_double(v);
  }
  std::size_t count(const std::string& k, std::optional<double> def = {}) {
    const double v = real(k, def);
    if (!(v >= 0) || v != std::floor(v)) throw ConfigError(k + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  std::string str(const std::string& k, const std::string& def) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return def;
    const std::string v = it->second;
    kv_.erase(it);
    return v;
  }
  void finish() const {
    if (!kv_.empty()) throw ConfigError("unknown parameter " + kv_.begin()->first);
  }

 private:
  std::map<std::string, std::string> kv_;
};

int cmd_gen(const std::string& kind, const std::vector<std::string>& args, const std::string& out, bool infinity,
            std::optional<std::uint64_t> seed) {
  KeyValues kv(args);
  auto need_seed = [&] {
    if (seed) {
      kv.str("seed", "");
      return *seed;
    }
    return static_cast<std::uint64_t>(kv.count("seed"));
  };
  GenerateOptions opts{infinity, 20000};
  PointSpace s;
  if (kind == "line") {
    const double start = kv.real("start", 0), step = kv.real("step", 1);
    s = real_line_grid(start, step, kv.count("count"), opts);
  } else if (kind == "grid") {
    const std::string p = kv.str("p", "2");
    const double pe = (p == "inf") ? INFINITY : parse_double(p);
    const int dims = static_cast<int>(kv.count("dims", 2));
    s = lp_grid(pe, dims, static_cast<int>(kv.count("side")), opts);
  } else if (kind == "word") {
    WordMetricParams wp;
    const auto g = kv.str("group", "zd");
    if (g == "zd") wp.group = WordGroup::zd;
    else if (g == "free") wp.group = WordGroup::free;
    else if (g == "heisenberg") wp.group = WordGroup::heisenberg;
    else throw ConfigError("group must be zd, free or heisenberg");
    wp.rank = static_cast<int>(kv.count("rank", 1));
    wp.radius = static_cast<int>(kv.count("radius", 3));
    s = word_metric_ball(wp, opts);
  } else if (kind == "random") {
    const auto n = kv.count("n");
    const int dims = static_cast<int>(kv.count("dims", 2));
    s = random_euclidean_space(n, dims, need_seed(), opts).materialized();
  } else if (kind == "quasimetric") {
    const auto n = kv.count("n");
    const int dims = static_cast<int>(kv.count("dims", 2));
    const double k = kv.real("K", 2);
    s = random_quasimetric(n, dims, k, need_seed());
    if (infinity) s.add_infinity_point();
  } else if (kind == "heisenberg") {
    const auto dim = kv.count("dim", 1), count = kv.count("count");
    s = heis_space(random_heis_points(dim, count, need_seed())).materialized();
    if (infinity) s.add_infinity_point();
  } else {
    throw ConfigError("unknown generator '" + kind + "' (line, grid, word, random, quasimetric, heisenberg)");
  }
  kv.finish();
  std::ostringstream csv;
  write_space_csv(s.materialized(), csv);
  if (out.empty() || out == "-") std::cout << csv.str();
  else write_atomic(out, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobius-lab: cross-ratios, gauges, Heisenberg kernels and cotype experiments"};
  app.set_version_flag("--version", std::string(MOBIUS_LAB_VERSION));
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Override every seed in the config");

  auto* run = app.add_subcommand("run", "Run an experiment config (TOML) and write a JSON report");
  std::string config, report;
  run->add_option("config", config, "Experiment config")->required();
  run->add_option("--report", report, "Report path (overrides output.report)");

  auto* conv = app.add_subcommand("convert", "Apply a transform chain to a distance-matrix CSV");
  std::string in, chain, out;
  std::size_t spot = 200;
  conv->add_option("--in", in, "Input space CSV")->required();
  conv->add_option("--chain", chain, "Steps: cayley@ID, inverse_cayley@ID, snowflake:ALPHA, chain_smooth")->required();
  conv->add_option("--out", out, "Output space CSV")->required();
  conv->add_option("--spot", spot, "Quadruples per cross-ratio spot check");

  auto* ver = app.add_subcommand("verify", "Check the extended-metric axioms of a space CSV");
  std::string vpath;
  ver->add_option("space", vpath, "Space CSV")->required();

  auto* gen = app.add_subcommand("gen", "Generate a space CSV: gen KIND key=value ...");
  std::string gkind, gout;
  std::vector<std::string> gargs;
  bool ginf = false;
  gen->add_option("kind", gkind, "line, grid, word, random, quasimetric, heisenberg")->required();
  gen->add_option("params", gargs, "key=value parameters");
  gen->add_option("--out", gout, "Output file (stdout if omitted)");
  gen->add_flag("--infinity", ginf, "Append a point at infinity");

  auto* kinds = app.add_subcommand("kinds", "List experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(config, seed, report);
    if (*conv) return cmd_convert(in, chain, out, spot, seed);
    if (*ver) return cmd_verify(vpath);
    if (*gen) return cmd_gen(gkind, gargs, gout, ginf, seed);
    if (*kinds) {
      for (const auto& k : experiment_kinds()) std::cout << k << "\n";
      return kOk;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
