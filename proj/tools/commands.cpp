#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "slgp/baselines.hpp"
#include "slgp/design.hpp"
#include "slgp/functionals.hpp"
#include "slgp/io.hpp"
#include "slgp/mcmc.hpp"
#include "slgp/reference_fields.hpp"

#ifndef SLGP_VERSION
#define SLGP_VERSION "0.0.0"
#endif

namespace slgp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Bad flag combination or unusable input; maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string json_scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return io::format_double(v.get<double>());
  throw UsageError("config values must be scalars");
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_output(path);
  f << j.dump(2) << '\n';
}

/// Resolved value of every option of a subcommand, as given or defaulted.
std::map<std::string, std::string> resolved_config(const CLI::App& sub) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      out[name] = opt->results().back();
    } else {
      out[name] = opt->get_default_str();
    }
  }
  return out;
}

json file_inventory(const fs::path& dir, const std::vector<std::string>& names) {
  json files = json::array();
  for (const auto& n : names) {
    files.push_back({{"path", n}, {"bytes", fs::file_size(dir / n)}});
  }
  return files;
}

json rate_summary(const std::vector<double>& rates) {
  if (rates.empty()) return nullptr;
  double lo = rates.front(), hi = rates.front(), mean = 0.0;
  for (double r : rates) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    mean += r / static_cast<double>(rates.size());
  }
  return {{"min", lo}, {"mean", mean}, {"max", hi}, {"count", rates.size()}};
}

struct Manifest {
  Manifest(std::string cmd, std::map<std::string, std::string> cfg)
      : command(std::move(cmd)), config(std::move(cfg)) {}

  std::string command;
  std::map<std::string, std::string> config;
  json timings = json::object();
  json acceptance = nullptr;
  std::vector<std::string> outputs;

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["version"] = version();
    j["config"] = config;
    j["timings_seconds"] = timings;
    j["acceptance_rate"] = acceptance;
    j["outputs"] = file_inventory(dir, outputs);
    write_json(dir / "manifest.json", j);
  }
};

// ---------------------------------------------------------------------------
// shared option groups

struct ModelOptions {
  int q = 5;
  std::size_t grid_size = 101;

  void add(CLI::App* sub) {
    sub->add_option("--q", q, "Fourier basis order (rank 2q(2q+1))")->check(CLI::Range(1, 40));
    sub->add_option("--grid-size", grid_size, "t-grid nodes on [0, 1]")->check(CLI::Range(2, 100001));
  }
  Model build() const { return Model(build_fourier_basis(q), grid_size); }
};

struct PcnOptions {
  std::size_t draws = 150;
  std::size_t burn_in = 2000;
  std::size_t thinning = 20;
  double beta = 0.1;
  bool adapt = true;
  std::string start = "map";

  void add(CLI::App* sub) {
    sub->add_option("--draws", draws, "retained pCN draws N")->check(CLI::Range(1, 10000000));
    sub->add_option("--burn-in", burn_in, "pCN burn-in iterations")->check(CLI::NonNegativeNumber);
    sub->add_option("--thinning", thinning, "keep every k-th state")->check(CLI::Range(1, 1000000));
    sub->add_option("--beta", beta, "initial pCN step size")->check(CLI::Range(1e-12, 1.0));
    sub->add_option("--adapt", adapt, "adapt beta during burn-in (true/false)");
    sub->add_option("--start", start, "chain start")->check(CLI::IsMember({"map", "zero"}));
  }
  PcnConfig config(std::uint64_t seed) const {
    PcnConfig c;
    c.beta = beta;
    c.burn_in = burn_in;
    c.thinning = thinning;
    c.n_iterations = burn_in + draws * thinning;
    c.adapt = adapt;
    c.seed = seed;
    c.start = start == "map" ? ChainStart::map : ChainStart::zero;
    return c;
  }
};

struct FieldSpec {
  ReferenceField field;
  std::string name;
};

FieldSpec parse_field_spec(const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) throw UsageError("field '" + text + "' must look like tg-f1");
  try {
    FieldSpec spec;
    spec.field.kind = parse_field_kind(text.substr(0, dash));
    spec.field.median = parse_median_id(text.substr(dash + 1));
    spec.name = std::string(spec.field.kind == FieldKind::truncated_gaussian ? "tg" : "mm") + "-" +
                std::string(to_string(spec.field.median));
    return spec;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct StrategySpec {
  std::string name;
  bool gp = false;
  Strategy strategy = Strategy::adaptive;
};

StrategySpec parse_strategy(const std::string& name) {
  if (name == "slgp-adaptive") return {name, false, Strategy::adaptive};
  if (name == "slgp-random") return {name, false, Strategy::random};
  if (name == "gp-adaptive") return {name, true, Strategy::adaptive};
  if (name == "gp-random") return {name, true, Strategy::random};
  throw UsageError("unknown strategy '" + name +
                   "' (expected slgp-adaptive, slgp-random, gp-adaptive or gp-random)");
}

struct LoopOptions {
  std::size_t steps = 10;
  std::size_t batch = 20;
  std::size_t simulations = 150;
  std::size_t candidates = 101;
  std::size_t initial = 20;
  double alpha = 0.9;
  double level = 0.5;

  void add(CLI::App* sub) {
    sub->add_option("--steps", steps, "sequential steps")->check(CLI::NonNegativeNumber);
    sub->add_option("--batch", batch, "observations per step K")->check(CLI::Range(1, 1000000));
    sub->add_option("--simulations", simulations, "simulated batches per candidate M")
        ->check(CLI::Range(1, 1000000));
    sub->add_option("--candidates", candidates, "regular candidate grid size")->check(CLI::Range(1, 100001));
    sub->add_option("--initial", initial, "uniform initial design size")->check(CLI::Range(1, 10000000));
    sub->add_option("--alpha", alpha, "quantile level of the EQI curves")->check(CLI::Range(1e-12, 1.0));
    sub->add_option("--level", level, "quantile level of the functional (0.5 = median)")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  }
};

OptimizationState run_strategy(const StrategySpec& s, const FieldOracle& oracle, Dataset initial,
                               const Model& model, const LoopOptions& loop, const PcnOptions& pcn,
                               std::size_t threads, Rng& rng) {
  if (s.gp) {
    GpOptimizationConfig cfg;
    cfg.steps = loop.steps;
    cfg.batch_size = loop.batch;
    cfg.candidates = loop.candidates;
    cfg.strategy = s.strategy;
    return run_gp_optimization(oracle, std::move(initial), cfg, rng);
  }
  OptimizationConfig cfg;
  cfg.steps = loop.steps;
  cfg.batch_size = loop.batch;
  cfg.simulations = loop.simulations;
  cfg.candidates = loop.candidates;
  cfg.pcn = pcn.config(0);
  cfg.rho = Functional{loop.level};
  cfg.alpha = loop.alpha;
  cfg.strategy = s.strategy;
  cfg.threads = threads;
  return run_optimization(oracle, std::move(initial), model, cfg, rng);
}

fs::path require_out_dir(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

// ---------------------------------------------------------------------------
// subcommands

struct BasisInfo {
  int q = 5;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--q", q, "Fourier basis order")->check(CLI::Range(1, 40));
    sub->add_option("--out", out, "also write basis.csv and a manifest to this directory");
  }

  int run(const CLI::App& sub, std::ostream& os) const {
    Stopwatch clock;
    const BasisSet basis = build_fourier_basis(q);
    std::ostringstream csv;
    csv << "index,kind,omega_t,omega_x,eigenvalue,weight\n";
    for (std::size_t j = 0; j < basis.rank(); ++j) {
      const auto& f = basis[j];
      csv << j << ',' << to_string(f.kind) << ',' << f.freq.omega_t << ',' << f.freq.omega_x << ','
          << io::format_double(f.eigenvalue()) << ',' << io::format_double(f.weight) << '\n';
    }
    os << csv.str();
    if (!out.empty()) {
      const fs::path dir = require_out_dir(out);
      open_output(dir / "basis.csv") << csv.str();
      Manifest m{"basis-info", resolved_config(sub)};
      m.timings["total"] = clock.seconds();
      m.outputs = {"basis.csv"};
      m.write(dir);
    }
    return kExitOk;
  }
};

struct Sample {
  std::string field = "tg";
  std::string median = "f1";
  double scale = 0.05;
  std::size_t n = 0;
  std::string locations;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--field", field, "tg (truncated Gaussian) or mm (multimodal)");
    sub->add_option("--median", median, "f1 or f2");
    sub->add_option("--scale", scale, "truncated Gaussian sd")->check(CLI::PositiveNumber);
    sub->add_option("--n", n, "number of uniform random locations");
    sub->add_option("--locations", locations, "comma-separated x locations instead of --n");
    sub->add_option("--batch", batch, "observations per location")->check(CLI::Range(1, 100000000));
    sub->add_option("--seed", seed, "random seed")->required();
    sub->add_option("--out", out, "output directory")->required();
  }

  int run(const CLI::App& sub, std::ostream&) const {
    Stopwatch clock;
    ReferenceField rf;
    try {
      rf.kind = parse_field_kind(field);
      rf.median = parse_median_id(median);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    rf.scale = scale;
    std::vector<double> xs;
    Rng rng(seed);
    if (!locations.empty()) {
      if (n != 0) throw UsageError("give either --n or --locations, not both");
      for (const auto& item : split_list(locations)) {
        double x = 0.0;
        try {
          std::size_t used = 0;
          x = std::stod(item, &used);
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw io::ValidationError("location '" + item + "' is not a number");
        }
        if (!(x >= 0.0 && x <= 1.0)) throw io::ValidationError("location " + item + " outside [0, 1]");
        xs.push_back(x);
      }
    } else {
      if (n == 0) throw UsageError("give --n >= 1 or --locations");
      xs = random_design(n, rng);
    }
    Dataset data;
    for (double x : xs) data.add_batch(x, sample_reference(rf, x, batch, rng));
    const fs::path dir = require_out_dir(out);
    {
      auto f = open_output(dir / "samples.csv");
      io::write_observations(f, data);
    }
    Manifest m{"sample", resolved_config(sub)};
    m.timings["total"] = clock.seconds();
    m.outputs = {"samples.csv"};
    m.write(dir);
    return kExitOk;
  }
};

struct Estimate {
  std::string input;
  ModelOptions model;
  PcnOptions pcn;
  std::size_t chains = 1;
  std::size_t x_points = 101;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--input", input, "observations CSV with header x,t")->required()->check(CLI::ExistingFile);
    model.add(sub);
    pcn.add(sub);
    sub->add_option("--chains", chains, "independent chains, pooled")->check(CLI::Range(1, 256));
    sub->add_option("--x-points", x_points, "regular x grid for the field output")->check(CLI::Range(2, 100001));
    sub->add_option("--seed", seed, "random seed")->required();
    sub->add_option("--out", out, "output directory")->required();
  }

  int run(const CLI::App& sub, std::ostream&) const {
    Stopwatch clock;
    Manifest m{"estimate", resolved_config(sub)};
    const Dataset data = io::read_observations(input);
    m.timings["read"] = clock.seconds();

    const Model slgp = model.build();
    const PcnConfig cfg = pcn.config(seed);
    cfg.validate();
    Stopwatch fit_clock;
    const PosteriorEnsemble ensemble = run_pcn_chains(slgp, data, cfg, chains);
    m.timings["fit"] = fit_clock.seconds();

    Stopwatch field_clock;
    const std::vector<double> xs = candidate_grid(x_points);
    const auto field = posterior_mean_field(ensemble, slgp, xs);
    std::vector<double> medians;
    medians.reserve(xs.size());
    for (const auto& slice : field) medians.push_back(apply_functional(slice, Functional::median()));
    m.timings["field"] = field_clock.seconds();

    const fs::path dir = require_out_dir(out);
    {
      auto f = open_output(dir / "field.csv");
      io::write_field(f, xs, field);
    }
    {
      auto f = open_output(dir / "ensemble.csv");
      io::write_ensemble(f, ensemble);
    }
    {
      auto f = open_output(dir / "median.csv");
      io::write_curve(f, xs, medians);
    }
    json ens;
    ens["seed"] = seed;
    ens["draws"] = ensemble.size();
    ens["rank"] = ensemble.rank();
    ens["chains"] = chains;
    ens["q"] = model.q;
    ens["grid_size"] = model.grid_size;
    ens["pcn"] = {{"beta", cfg.beta},           {"n_iterations", cfg.n_iterations},
                  {"burn_in", cfg.burn_in},     {"thinning", cfg.thinning},
                  {"adapt", cfg.adapt},         {"start", pcn.start}};
    ens["acceptance_rate"] = ensemble.acceptance_rate;
    ens["final_beta"] = ensemble.final_beta;
    write_json(dir / "ensemble.json", ens);

    m.acceptance = rate_summary({ensemble.acceptance_rate});
    m.timings["total"] = clock.seconds();
    m.outputs = {"field.csv", "ensemble.csv", "ensemble.json", "median.csv"};
    m.write(dir);
    return kExitOk;
  }
};

struct Distance {
  std::string a;
  std::string b;
  std::string reference;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--a", a, "field CSV (x,t,density)")->required()->check(CLI::ExistingFile);
    sub->add_option("--b", b, "second field CSV")->check(CLI::ExistingFile);
    sub->add_option("--reference", reference, "compare --a with a reference field instead, e.g. tg-f1");
    sub->add_option("--out", out, "also write distance.json and a manifest to this directory");
  }

  int run(const CLI::App& sub, std::ostream& os) const {
    Stopwatch clock;
    if (b.empty() == reference.empty()) throw UsageError("give exactly one of --b and --reference");
    const io::FieldTable fa = io::read_field(a);
    std::vector<DensityGrid> other;
    if (!b.empty()) {
      const io::FieldTable fb = io::read_field(b);
      if (fb.x_grid != fa.x_grid) throw io::ValidationError("fields have different x grids");
      other = fb.slices;
    } else {
      other = reference_field_grid(parse_field_spec(reference).field, fa.x_grid, fa.slices.front().grid);
    }
    if (!fa.slices.front().grid->same_nodes(*other.front().grid)) {
      throw io::ValidationError("fields have different t grids");
    }
    const double d = ish_distance(fa.slices, other, fa.x_grid);
    os << io::format_double(d) << '\n';
    if (!out.empty()) {
      const fs::path dir = require_out_dir(out);
      write_json(dir / "distance.json", {{"ish_distance", d}});
      Manifest m{"distance", resolved_config(sub)};
      m.timings["total"] = clock.seconds();
      m.outputs = {"distance.json"};
      m.write(dir);
    }
    return kExitOk;
  }
};

std::string maybe_nan(double v) { return std::isnan(v) ? "nan" : io::format_double(v); }

struct Optimize {
  std::string field = "tg-f1";
  std::string strategy = "slgp-adaptive";
  std::string input;
  ModelOptions model;
  PcnOptions pcn;
  LoopOptions loop;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--field", field, "reference field: tg-f1, mm-f1, tg-f2 or mm-f2");
    sub->add_option("--strategy", strategy, "slgp-adaptive, slgp-random, gp-adaptive or gp-random");
    sub->add_option("--input", input, "initial observations CSV instead of a random design")
        ->check(CLI::ExistingFile);
    model.add(sub);
    pcn.add(sub);
    loop.add(sub);
    sub->add_option("--threads", threads, "threads for candidate evaluation")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "random seed")->required();
    sub->add_option("--out", out, "output directory")->required();
  }

  int run(const CLI::App& sub, std::ostream&) const {
    Stopwatch clock;
    const FieldSpec spec = parse_field_spec(field);
    const StrategySpec strat = parse_strategy(strategy);
    pcn.config(0).validate();
    Dataset initial;
    if (!input.empty()) {
      initial = io::read_observations(input);
    } else {
      Rng init(derive_seed(seed, 0));
      initial = sample_random_design(spec.field, loop.initial, init);
    }
    const FieldOracle oracle = make_oracle(spec.field);
    const Model slgp = model.build();
    Rng rng(derive_seed(seed, 1));
    const OptimizationState state =
        run_strategy(strat, oracle, initial, slgp, loop, pcn, threads, rng);

    const fs::path dir = require_out_dir(out);
    Manifest m{"optimize", resolved_config(sub)};
    std::vector<double> rates;
    auto steps_file = open_output(dir / "steps.jsonl");
    auto history = open_output(dir / "history.csv");
    history << "step,chosen_x,estimated_minimizer,gap,acceptance_rate\n";
    auto emit = [&](const StepRecord& r, bool has_rate) {
      json j;
      j["step"] = r.step;
      j["chosen_x"] = std::isnan(r.chosen_x) ? json(nullptr) : json(r.chosen_x);
      j["estimated_minimizer"] = r.estimated_minimizer;
      j["gap"] = r.gap;
      j["acceptance_rate"] = has_rate ? json(r.acceptance_rate) : json(nullptr);
      j["criterion_table"] = nullptr;
      if (!r.criterion.empty()) {
        const std::string name = "eqi_step_" + std::to_string(r.step) + ".csv";
        auto f = open_output(dir / name);
        io::write_curve(f, candidate_grid(loop.candidates), r.criterion);
        j["criterion_table"] = name;
        m.outputs.push_back(name);
      }
      steps_file << j.dump() << '\n';
      history << r.step << ',' << maybe_nan(r.chosen_x) << ',' << io::format_double(r.estimated_minimizer)
              << ',' << io::format_double(r.gap) << ','
              << (has_rate ? io::format_double(r.acceptance_rate) : "nan") << '\n';
      if (has_rate) rates.push_back(r.acceptance_rate);
    };
    emit(state.initial, !strat.gp);
    for (const auto& r : state.history) emit(r, !strat.gp);
    steps_file.close();
    history.close();
    {
      auto f = open_output(dir / "data.csv");
      io::write_observations(f, state.dataset);
    }
    m.outputs.insert(m.outputs.begin(), {"steps.jsonl", "history.csv", "data.csv"});
    m.acceptance = rate_summary(rates);
    m.timings["total"] = clock.seconds();
    m.write(dir);
    return kExitOk;
  }
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Benchmark {
  std::string fields = "tg-f1,mm-f1,tg-f2,mm-f2";
  std::string strategies = "slgp-adaptive,slgp-random,gp-adaptive,gp-random";
  std::size_t repetitions = 12;
  ModelOptions model;
  PcnOptions pcn;
  LoopOptions loop;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--fields", fields, "comma-separated reference fields");
    sub->add_option("--strategies", strategies, "comma-separated strategies");
    sub->add_option("--repetitions", repetitions, "repetitions per cell")->check(CLI::Range(1, 100000));
    model.add(sub);
    pcn.add(sub);
    loop.add(sub);
    sub->add_option("--threads", threads, "worker threads over repetitions")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "random seed")->required();
    sub->add_option("--out", out, "output directory")->required();
  }

  struct Job {
    std::size_t strategy, field, repetition;
  };
  struct JobResult {
    std::string rows;
    std::vector<double> gaps;
    std::vector<double> rates;
  };

  int run(const CLI::App& sub, std::ostream&) const {
    Stopwatch clock;
    std::vector<StrategySpec> strats;
    for (const auto& s : split_list(strategies)) strats.push_back(parse_strategy(s));
    std::vector<FieldSpec> specs;
    for (const auto& f : split_list(fields)) specs.push_back(parse_field_spec(f));
    if (strats.empty() || specs.empty()) throw UsageError("need at least one strategy and one field");
    pcn.config(0).validate();
    const Model slgp = model.build();
    const fs::path dir = require_out_dir(out);

    std::vector<Job> jobs;
    for (std::size_t s = 0; s < strats.size(); ++s)
      for (std::size_t f = 0; f < specs.size(); ++f)
        for (std::size_t r = 0; r < repetitions; ++r) jobs.push_back({s, f, r});

    auto execute = [&](const Job& job) {
      const FieldSpec& spec = specs[job.field];
      const StrategySpec& strat = strats[job.strategy];
      // The initial design depends on (field, repetition) only, so strategies
      // are compared on paired starts.
      const std::uint64_t pair_seed = derive_seed(seed, job.field * 1000003 + job.repetition);
      Rng init(pair_seed);
      Dataset initial = sample_random_design(spec.field, loop.initial, init);
      Rng rng(derive_seed(pair_seed, 1 + job.strategy));
      const OptimizationState state =
          run_strategy(strat, make_oracle(spec.field), std::move(initial), slgp, loop, pcn, 1, rng);
      JobResult res;
      std::ostringstream rows;
      auto row = [&](const StepRecord& r) {
        rows << strat.name << ',' << spec.name << ',' << job.repetition << ',' << r.step << ','
             << maybe_nan(r.chosen_x) << ',' << io::format_double(r.gap) << '\n';
        res.gaps.push_back(r.gap);
        if (!strat.gp) res.rates.push_back(r.acceptance_rate);
      };
      row(state.initial);
      for (const auto& r : state.history) row(r);
      res.rows = rows.str();
      return res;
    };

    auto runs = open_output(dir / "runs.csv");
    runs << "strategy,field,repetition,step,chosen_x,gap\n";
    // gaps[cell][step][repetition]
    std::vector<std::vector<std::vector<double>>> gaps(
        strats.size() * specs.size(),
        std::vector<std::vector<double>>(loop.steps + 1, std::vector<double>(repetitions)));
    std::vector<double> rates;
    auto consume = [&](const Job& job, JobResult res) {
      runs << res.rows;
      runs.flush();
      auto& cell = gaps[job.strategy * specs.size() + job.field];
      for (std::size_t s = 0; s < res.gaps.size(); ++s) cell[s][job.repetition] = res.gaps[s];
      rates.insert(rates.end(), res.rates.begin(), res.rates.end());
    };

    const std::size_t workers = std::min(threads, jobs.size());
    if (workers <= 1) {
      for (const auto& job : jobs) consume(job, execute(job));
    } else {
      // Workers take jobs in order; results are written in job order as soon
      // as the next one is ready, so at most a few finished jobs are buffered.
      std::mutex mutex;
      std::condition_variable ready;
      std::vector<std::optional<JobResult>> done(jobs.size());
      std::exception_ptr failure;
      std::atomic<std::size_t> next{0};
      std::atomic<bool> stop{false};
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            while (!stop) {
              const std::size_t i = next++;
              if (i >= jobs.size()) return;
              try {
                JobResult res = execute(jobs[i]);
                std::lock_guard lock(mutex);
                done[i] = std::move(res);
              } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                stop = true;
              }
              ready.notify_all();
            }
          });
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) {
          std::unique_lock lock(mutex);
          ready.wait(lock, [&] { return done[i].has_value() || failure; });
          if (failure) break;
          JobResult res = std::move(*done[i]);
          done[i].reset();
          lock.unlock();
          consume(jobs[i], std::move(res));
        }
        stop = true;
      }
      if (failure) std::rethrow_exception(failure);
    }
    runs.close();

    {
      auto f = open_output(dir / "median_gap.csv");
      f << "strategy,field,step,median_gap\n";
      for (std::size_t s = 0; s < strats.size(); ++s) {
        for (std::size_t fi = 0; fi < specs.size(); ++fi) {
          const auto& cell = gaps[s * specs.size() + fi];
          for (std::size_t step = 0; step < cell.size(); ++step) {
            f << strats[s].name << ',' << specs[fi].name << ',' << step << ','
              << io::format_double(median_of(cell[step])) << '\n';
          }
        }
      }
    }
    Manifest m{"benchmark", resolved_config(sub)};
    m.acceptance = rate_summary(rates);
    m.timings["total"] = clock.seconds();
    m.outputs = {"runs.csv", "median_gap.csv"};
    m.write(dir);
    return kExitOk;
  }
};

/// Inserts `--key=value` tokens from a --config file right after the
/// subcommand name; options keep their last value, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::size_t sub_index = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      sub_index = i;
      break;
    }
  }
  if (sub_index == args.size()) return args;
  std::optional<std::string> path;
  for (std::size_t i = sub_index + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  const ConfigFile cfg = read_config_file(*path, args[sub_index]);
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(sub_index) + 1);
  for (const auto& [key, value] : cfg.values) {
    // empty means "not set" (manifests record unset string options that way)
    if (key == "config" || value.empty()) continue;
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + static_cast<long>(sub_index) + 1, args.end());
  return out;
}

}  // namespace

const char* version() { return SLGP_VERSION; }

ConfigFile read_config_file(const fs::path& path, const std::string& subcommand) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  ConfigFile cfg;

  if (trim(text).rfind('{', 0) == 0) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw UsageError(path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
      throw UsageError(path.string() + ": manifest has no config object");
    }
    cfg.command = j.value("command", "");
    if (!cfg.command.empty() && cfg.command != subcommand) {
      throw UsageError(path.string() + " is a '" + cfg.command + "' manifest, not '" + subcommand + "'");
    }
    for (const auto& [key, value] : j["config"].items()) cfg.values[key] = json_scalar_to_string(value);
    return cfg;
  }

  std::istringstream lines(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw io::ParseError(path.string(), line_no, "unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw io::ParseError(path.string(), line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw io::ParseError(path.string(), line_no, "empty key");
    if (section.empty() || section == subcommand) cfg.values[key] = value;
  }
  return cfg;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial logistic Gaussian process density fields and quantile-improvement design", "slgp"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  BasisInfo basis_info;
  Sample sample;
  Estimate estimate;
  Distance distance;
  Optimize optimize;
  Benchmark benchmark;

  std::string config_path;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value file or a run manifest; flags take precedence");
    cmd.add(sub);
    return sub;
  };
  CLI::App* s_basis = add("basis-info", "list the Fourier basis terms and weights", basis_info);
  CLI::App* s_sample = add("sample", "draw observations from a reference field", sample);
  CLI::App* s_estimate = add("estimate", "fit the density field to observations by pCN", estimate);
  CLI::App* s_distance = add("distance", "integrated squared Hellinger distance between fields", distance);
  CLI::App* s_optimize = add("optimize", "run one sequential design loop", optimize);
  CLI::App* s_benchmark = add("benchmark", "compare strategies over repeated design loops", benchmark);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const io::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (s_basis->parsed()) return basis_info.run(*s_basis, out);
    if (s_sample->parsed()) return sample.run(*s_sample, out);
    if (s_estimate->parsed()) return estimate.run(*s_estimate, out);
    if (s_distance->parsed()) return distance.run(*s_distance, out);
    if (s_optimize->parsed()) return optimize.run(*s_optimize, out);
    if (s_benchmark->parsed()) return benchmark.run(*s_benchmark, out);
  } catch (const io::ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const io::ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace slgp::cli
