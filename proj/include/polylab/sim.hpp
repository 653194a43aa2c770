#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "polylab/chain.hpp"
#include "polylab/config.hpp"
#include "polylab/dp.hpp"
#include "polylab/io.hpp"
#include "polylab/localization.hpp"
#include "polylab/parallel.hpp"
#include "polylab/random_instances.hpp"

namespace polylab {

inline constexpr const char* kVersion = "0.1.0";

inline double resolve_alpha(const ExperimentConfig& cfg, double beta) {
  return cfg.alpha_auto ? auto_alpha(cfg.env, beta) : cfg.alpha;
}

// All commands produce their data files as in-memory strings first; the
// manifest (the only place a timestamp lives) is added at write time.
using FileSet = std::vector<std::pair<std::string, std::string>>;

inline json manifest_json(const ExperimentConfig& cfg,
                          const std::vector<std::uint64_t>& seeds,
                          double wall_clock_sec, const FileSet& files) {
  json outputs = json::array();
  for (const auto& [name, data] : files)
    outputs.push_back({{"file", name}, {"fnv64", digest_hex(data)}});
  return json{{"config", cfg.echo},
              {"version", kVersion},
              {"seeds", seeds},
              {"wall_clock_sec", wall_clock_sec},
              {"outputs", outputs}};
}

inline void write_fileset(const ExperimentConfig& cfg, const FileSet& files,
                          const std::vector<std::uint64_t>& seeds,
                          double wall_clock_sec) {
  namespace fs = std::filesystem;
  fs::path dir(cfg.outputs);
  fs::create_directories(dir);
  for (const auto& [name, data] : files) write_file(dir / name, data);
  write_file(dir / "manifest.json",
             manifest_json(cfg, seeds, wall_clock_sec, files).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// simulate: DP replicas + localization series for a single beta

struct EpsSchedule {
  std::string name;
  std::vector<double> eps;  // one value per step index 0..n
};

inline std::vector<EpsSchedule> eps_schedules(const LocalizationParams& loc,
                                              std::size_t steps) {
  std::vector<EpsSchedule> out;
  for (double e : loc.eps_constants) {
    std::ostringstream name;
    name << "const_" << e;
    out.push_back({name.str(), std::vector<double>(steps, e)});
  }
  if (loc.eps_decay) out.push_back({"decay", decaying_eps_schedule(steps)});
  return out;
}

struct SeedSimResult {
  std::uint64_t seed;
  std::vector<ReplicaPoint> checkpoints;
  std::string loc_series_csv;
  std::vector<double> apa_avg;      // per schedule
  double geo_density = 0;
  bool truncation_warned = false;
};

inline SeedSimResult simulate_one_seed(const ExperimentConfig& cfg, double beta,
                                       std::uint64_t seed) {
  SeedSimResult res;
  res.seed = seed;
  int d = cfg.walk.dim();
  auto grid = checkpoint_grid(cfg.n);
  auto scheds = eps_schedules(cfg.loc, std::size_t(cfg.n) + 1);

  SeededField field(seed, cfg.env);
  PolymerState st = init_state();

  std::ostringstream series;
  series << "i,schedule,eps_i,atomic_mass,max_atom,geo_flag,window_mass\n";
  std::vector<double> apa_sums(scheds.size(), 0.0);
  long long geo_hits = 0;

  auto record = [&](std::int64_t i, const Pmf& f) {
    double mx = max_atom(f);
    GeoResult geo = geo_indicator(f, d, cfg.loc.delta, cfg.loc.K,
                                  f.size() > 20000 ? 64 : 4096);
    if (geo.flag) ++geo_hits;
    for (std::size_t s = 0; s < scheds.size(); ++s) {
      double eps = scheds[s].eps[std::size_t(i)];
      double am = atomic_mass(f, eps);
      apa_sums[s] += am;
      series << i << ',' << scheds[s].name << ',' << fmt_double(eps) << ','
             << fmt_double(am) << ',' << fmt_double(mx) << ',' << (geo.flag ? 1 : 0)
             << ',' << fmt_double(geo.window_mass) << '\n';
    }
  };

  record(0, endpoint_distribution_normalized(st));
  std::size_t gi = 0;
  for (std::int64_t i = 1; i <= cfg.n; ++i) {
    st = advance(st, cfg.walk, field, beta, cfg.trunc);
    record(i, endpoint_distribution_normalized(st));
    if (gi < grid.size() && grid[gi] == i) {
      res.checkpoints.push_back({seed, i, st.log_z, free_energy(st), st.dropped_mass()});
      ++gi;
    }
  }
  // the theorem averages i = 0..n-1; drop the final record from the averages
  double denom = double(cfg.n);
  for (std::size_t s = 0; s < scheds.size(); ++s) {
    double last_eps = scheds[s].eps[std::size_t(cfg.n)];
    auto last = endpoint_distribution_normalized(st);
    res.apa_avg.push_back((apa_sums[s] - atomic_mass(last, last_eps)) / denom);
  }
  {
    auto last = endpoint_distribution_normalized(st);
    bool last_flag = geo_indicator(last, d, cfg.loc.delta, cfg.loc.K,
                                   last.size() > 20000 ? 64 : 4096).flag;
    res.geo_density = double(geo_hits - (last_flag ? 1 : 0)) / denom;
  }
  res.loc_series_csv = series.str();
  res.truncation_warned = st.truncation_warned;
  return res;
}

struct SimulateOutput {
  FileSet files;
  ReplicaSummary summary;
  std::vector<std::uint64_t> seeds;
  bool truncation_warned = false;
};

inline SimulateOutput run_simulate(const ExperimentConfig& cfg) {
  if (cfg.beta.values.size() != 1)
    throw ConfigError("simulate expects a single beta (use scan for grids)");
  double beta = cfg.beta.values[0];

  std::vector<SeedSimResult> results(std::size_t(cfg.seed_count));
  run_tasks(std::size_t(cfg.seed_count), [&](std::size_t s) {
    std::uint64_t seed = derive_seed(cfg.base_seed, kSeedPurposeField, s);
    results[s] = simulate_one_seed(cfg, beta, seed);
  });

  SimulateOutput out;
  double lam = lambda(cfg.env, beta);
  auto scheds = eps_schedules(cfg.loc, std::size_t(cfg.n) + 1);

  std::ostringstream replicas;
  replicas << "seed,n,logZ,F_n,dropped_mass\n";
  std::map<std::int64_t, RunningStats> by_n;
  for (const auto& r : results) {
    out.seeds.push_back(r.seed);
    out.truncation_warned = out.truncation_warned || r.truncation_warned;
    for (const auto& p : r.checkpoints) {
      replicas << p.seed << ',' << p.n << ',' << fmt_double(p.log_z) << ','
               << fmt_double(p.free_energy) << ',' << fmt_double(p.dropped_mass) << '\n';
      by_n[p.n].add(p.free_energy);
    }
  }
  out.files.push_back({"replicas.csv", replicas.str()});

  std::ostringstream summary;
  for (const auto& [n, stats] : by_n) {
    json row{{"beta", beta},         {"n", n},
             {"mean_F", stats.mean}, {"se_F", stats.stderror()},
             {"lambda", lam},        {"gap", lam - stats.mean}};
    summary << row.dump() << '\n';
  }
  out.files.push_back({"summary.jsonl", summary.str()});

  std::ostringstream loc_summary;
  for (std::size_t s = 0; s < results.size(); ++s) {
    out.files.push_back(
        {"loc_series_seed" + std::to_string(s) + ".csv", results[s].loc_series_csv});
    for (std::size_t k = 0; k < scheds.size(); ++k) {
      json row{{"beta", beta},
               {"n", cfg.n},
               {"seed", results[s].seed},
               {"apa_avg", results[s].apa_avg[k]},
               {"geo_density", results[s].geo_density},
               {"eps_schedule", scheds[k].name},
               {"delta", cfg.loc.delta},
               {"K", cfg.loc.K}};
      loc_summary << row.dump() << '\n';
    }
  }
  out.files.push_back({"loc_summary.jsonl", loc_summary.str()});

  out.summary = by_n.empty()
                    ? ReplicaSummary{beta, cfg.n, 0, 0, lam, lam}
                    : ReplicaSummary{beta,
                                     cfg.n,
                                     by_n.rbegin()->second.mean,
                                     by_n.rbegin()->second.stderror(),
                                     lam,
                                     lam - by_n.rbegin()->second.mean};
  return out;
}

// ---------------------------------------------------------------------------
// scan: free-energy gap across a beta grid

struct ScanRow {
  double beta;
  double lambda;
  double mean_f;
  double se;
  double gap;
};

struct ScanOutput {
  FileSet files;
  std::vector<ScanRow> rows;
  int isotonic_violations = 0;       // adjacent decreases beyond 3 SE
  std::vector<std::uint64_t> seeds;
};

inline ScanOutput run_scan(const ExperimentConfig& cfg) {
  const auto& betas = cfg.beta.values;
  std::size_t tasks = betas.size() * std::size_t(cfg.seed_count);
  std::vector<double> final_f(tasks);

  run_tasks(tasks, [&](std::size_t t) {
    std::size_t bi = t / std::size_t(cfg.seed_count);
    std::size_t si = t % std::size_t(cfg.seed_count);
    std::uint64_t seed = derive_seed(cfg.base_seed, kSeedPurposeField, si);
    SeededField field(seed, cfg.env);
    PolymerState st = init_state();
    for (std::int64_t i = 1; i <= cfg.n; ++i)
      st = advance(st, cfg.walk, field, betas[bi], cfg.trunc);
    final_f[t] = free_energy(st);
  });

  ScanOutput out;
  for (int s = 0; s < cfg.seed_count; ++s)
    out.seeds.push_back(derive_seed(cfg.base_seed, kSeedPurposeField, std::uint64_t(s)));

  std::ostringstream csv;
  csv << "beta,lambda,mean_F,se,gap\n";
  for (std::size_t bi = 0; bi < betas.size(); ++bi) {
    RunningStats stats;
    for (int s = 0; s < cfg.seed_count; ++s)
      stats.add(final_f[bi * std::size_t(cfg.seed_count) + std::size_t(s)]);
    double lam = lambda(cfg.env, betas[bi]);
    ScanRow row{betas[bi], lam, stats.mean, stats.stderror(), lam - stats.mean};
    out.rows.push_back(row);
    csv << fmt_double(row.beta) << ',' << fmt_double(row.lambda) << ','
        << fmt_double(row.mean_f) << ',' << fmt_double(row.se) << ','
        << fmt_double(row.gap) << '\n';
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    double slack = 3 * std::hypot(out.rows[i - 1].se, out.rows[i].se);
    if (out.rows[i].gap < out.rows[i - 1].gap - slack) ++out.isotonic_violations;
  }
  out.files.push_back({"scan.csv", csv.str()});
  json summary{{"n", cfg.n},
               {"seeds", cfg.seed_count},
               {"isotonic_violations", out.isotonic_violations}};
  out.files.push_back({"scan_summary.json", summary.dump(2) + "\n"});
  return out;
}

// ---------------------------------------------------------------------------
// chain: endpoint-chain trajectories and variational diagnostics

struct ChainOutput {
  FileSet files;
  std::vector<VariationalRow> rows;
  std::vector<std::uint64_t> seeds;
};

inline ChainOutput run_chain_command(const ExperimentConfig& cfg) {
  if (cfg.beta.values.size() != 1) throw ConfigError("chain expects a single beta");
  double beta = cfg.beta.values[0];
  double alpha = resolve_alpha(cfg, beta);
  UpdateContext ctx(cfg.walk, beta, cfg.env, alpha);

  const json& raw = cfg.echo.contains("chain") ? cfg.echo.at("chain") : json::object();
  std::size_t subsample = detail::get_or<std::size_t>(raw, "subsample", 64);
  long long per_atom = detail::get_or<long long>(raw, "samples_per_atom", 10000);
  std::size_t atom_cap = detail::get_or<std::size_t>(raw, "atom_cap", 256);
  std::vector<std::int64_t> cps = detail::get_or<std::vector<std::int64_t>>(
      raw, "checkpoints", {250, 500, 1000});
  bool zero_start = detail::get_or<std::string>(raw, "initial", "point") == "zero";

  int d = cfg.walk.dim();
  ChainOutput out;
  std::vector<std::string> trajectories(std::size_t(cfg.seed_count));
  std::vector<json> diags(std::size_t(cfg.seed_count));
  std::vector<VariationalRow> rows(std::size_t(cfg.seed_count));

  run_tasks(std::size_t(cfg.seed_count), [&](std::size_t s) {
    std::uint64_t seed = derive_seed(cfg.base_seed, kSeedPurposeField, s);
    Pspm zero;
    ChainTrajectory traj = run_chain(ctx, cfg.n, seed, cfg.trunc, atom_cap,
                                     zero_start ? &zero : nullptr);
    std::ostringstream tr;
    for (std::int64_t i = 1; i <= cfg.n; ++i) {
      const Pspm& st = traj.states[std::size_t(i)];
      json line{{"i", i},
                {"logRatio", traj.log_ratios[std::size_t(i) - 1]},
                {"norm", st.norm()},
                {"top_atoms", top_atoms_json(st, d, 8)}};
      tr << line.dump() << '\n';
    }
    trajectories[s] = tr.str();

    double fn = traj.free_energy();
    std::size_t m = std::min<std::size_t>(subsample, std::size_t(cfg.n));
    Estimate lr = lifted_R(traj.subsample(std::size_t(cfg.n) - 1, m), ctx, per_atom,
                           mix64(seed, 0x52));
    rows[s] = {seed, fn, lr.value, lr.se, std::abs(lr.value - fn)};

    json gaps = json::array();
    for (std::int64_t cp : cps) {
      if (cp > cfg.n || std::size_t(cp) + 1 < m) continue;
      ChainTrajectory head;
      head.states.assign(traj.states.begin(), traj.states.begin() + cp + 1);
      head.log_ratios.assign(traj.log_ratios.begin(), traj.log_ratios.begin() + cp);
      gaps.push_back({{"n", cp},
                      {"gap", stationarity_gap(head, ctx, m, mix64(seed, 0x53))}});
    }

    json fourth;
    {
      Pspm f = traj.states.back();
      if (!f.is_zero()) {
        Pspm unit;  // renormalize the stored snapshot to unit mass
        for (const auto& [u, mass] : f.entries()) unit.set(u, mass / f.norm());
        auto fm = fourth_moment_check(unit, ctx, 20000, mix64(seed, 0x54));
        fourth = {{"estimate", fm.estimate}, {"se", fm.se}, {"bound", fm.bound}};
      }
    }

    diags[s] = json{{"seed", seed},
                    {"beta", beta},
                    {"alpha", alpha},
                    {"lambda", lambda(cfg.env, beta)},
                    {"F_n", fn},
                    {"lifted_R", lr.value},
                    {"lifted_R_se", lr.se},
                    {"abs_diff", rows[s].diff},
                    {"stationarity_gaps", gaps},
                    {"fourth_moment", fourth}};
  });

  std::ostringstream diag_stream;
  for (std::size_t s = 0; s < diags.size(); ++s) {
    out.seeds.push_back(rows[s].seed);
    out.rows.push_back(rows[s]);
    out.files.push_back(
        {"trajectory_seed" + std::to_string(s) + ".jsonl", trajectories[s]});
    diag_stream << diags[s].dump() << '\n';
  }
  out.files.push_back({"diagnostics.jsonl", diag_stream.str()});
  return out;
}

// ---------------------------------------------------------------------------
// oracle: exact small-instance identity suite

struct OracleCheck {
  std::string name;
  double residual = 0;
  double tolerance = 1e-10;
  bool pass = false;
  bool skipped = false;
  std::string note;
};

struct OracleOptions {
  int cases = 20;
  int n = 5;
  std::uint64_t seed = 20240817;
  bool corrupt = false;  // test hook: perturb one field seed mid-suite
};

inline std::vector<OracleCheck> run_oracle(const OracleOptions& opt = {}) {
  std::vector<OracleCheck> checks;
  CounterRng rng(opt.seed);
  auto law = EnvironmentLaw::gaussian(0, 1);

  {  // DP vs path enumeration
    OracleCheck c{"dp_vs_path_enumeration"};
    if (std::pow(4.0, double(opt.n)) > 1e7) {
      c.skipped = true;
      c.note = "enumeration guard exceeded";
    } else {
      double worst = 0;
      for (int k = 0; k < opt.cases; ++k) {
        StepDistribution P = random_walk_1d(rng);
        double beta = 0.1 + 0.7 * rng.next_unit();
        std::uint64_t fseed = rng.next_u64();
        SeededField field(fseed, law);
        PolymerState st = init_state();
        for (int i = 0; i < opt.n; ++i)
          st = advance(st, P, field, beta, TruncationPolicy::off());
        // test hook: the oracle must notice a disagreeing environment
        std::uint64_t oseed = opt.corrupt && k == opt.cases / 2 ? fseed ^ 1 : fseed;
        SeededField oracle_field(oseed, law);
        worst = std::max(worst,
                         std::abs(st.log_z - brute_force_log_Z(P, oracle_field, beta, opt.n)));
      }
      c.residual = worst;
      c.pass = worst < c.tolerance;
    }
    checks.push_back(c);
  }

  {  // shift identity
    OracleCheck c{"shift_identity"};
    double worst = 0;
    for (int k = 0; k < opt.cases; ++k) {
      StepDistribution P = random_walk_1d(rng);
      double beta = 0.1 + 0.7 * rng.next_unit();
      int cut = int(rng.next_below(std::uint64_t(opt.n) + 1));
      SeededField field(rng.next_u64(), law);
      worst = std::max(worst, shift_identity_check(P, field, beta, opt.n, cut));
    }
    c.residual = worst;
    c.pass = worst < c.tolerance;
    checks.push_back(c);
  }

  {  // chain / DP consistency
    OracleCheck c{"chain_dp_consistency"};
    double worst = 0;
    for (int k = 0; k < opt.cases; ++k) {
      StepDistribution P = random_walk_1d(rng);
      double beta = 0.1 + 0.7 * rng.next_unit();
      std::uint64_t fseed = rng.next_u64();
      UpdateContext ctx(P, beta, law, 2.0);
      ChainTrajectory traj = run_chain(ctx, opt.n, fseed);
      SeededField field(fseed, law);
      PolymerState st = init_state();
      for (int i = 0; i < opt.n; ++i)
        st = advance(st, P, field, beta, TruncationPolicy::off());
      double sum = 0;
      for (double r : traj.log_ratios) sum += r;
      worst = std::max(worst, std::abs(sum - st.log_z));
    }
    c.residual = worst;
    c.pass = worst < c.tolerance;
    checks.push_back(c);
  }

  {  // metric axioms on random pspm triples
    OracleCheck c{"metric_axioms"};
    c.tolerance = 1e-12;
    double worst = 0;
    for (int k = 0; k < opt.cases; ++k) {
      Pspm f = random_pspm(rng, 1, 4, 2, 3, rng.next_unit());
      Pspm g = random_pspm(rng, 1, 4, 2, 3, rng.next_unit());
      Pspm h = random_pspm(rng, 1, 4, 2, 3, rng.next_unit());
      double fg = d_alpha_exact(f, g, 2.0), gh = d_alpha_exact(g, h, 2.0);
      double fh = d_alpha_exact(f, h, 2.0);
      worst = std::max(worst, fh - (fg + gh));
      worst = std::max(worst, std::abs(fg - d_alpha_exact(g, f, 2.0)));
      worst = std::max(worst, d_alpha_exact(f, translate_level(f, 1, vec1(2)), 2.0));
    }
    c.residual = std::max(worst, 0.0);
    c.pass = c.residual < c.tolerance;
    checks.push_back(c);
  }
  return checks;
}

}  // namespace polylab
