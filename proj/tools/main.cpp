#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sizeunfold/harness.hpp"

using namespace sizeunfold;
using nlohmann::json;

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) parts.push_back(tok);
  return parts;
}

Polyhedron parse_shape(const std::string& name) {
  if (name == "cube") return make_cube();
  if (name == "tetrahedron" || name == "tetra") return make_tetrahedron();
  if (name == "dodecahedron" || name == "dodeca") return make_dodecahedron();
  if (name.rfind("ball:", 0) == 0) return make_ball_mesh(std::stoi(name.substr(5)));
  if (name.size() > 4 && name.substr(name.size() - 4) == ".off") return load_off(name);
  throw CLI::ValidationError(
      "--shape", "unknown shape '" + name +
                     "' (cube, tetrahedron, dodecahedron, ball, ball:<frequency>, "
                     "or a path to an .off file)");
}

ParametricSize parse_dist(const std::string& spec) {
  const auto parts = split_on(spec, ':');
  try {
    if ((parts[0] == "exp" || parts[0] == "exponential") && parts.size() == 2)
      return ParametricSize::exponential(std::stod(parts[1]));
    if ((parts[0] == "lognormal" || parts[0] == "ln") && parts.size() == 3)
      return ParametricSize::lognormal(std::stod(parts[1]), std::stod(parts[2]));
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError(
      "--dist", "unknown size law '" + spec + "' (exp:<rate> or lognormal:<mu>:<sigma>)");
}

SolverConfig::Method parse_method(const std::string& s) {
  if (s == "em") return SolverConfig::Method::EM;
  if (s == "icm") return SolverConfig::Method::ICM;
  if (s == "hybrid") return SolverConfig::Method::Hybrid;
  throw CLI::ValidationError("--solver", "unknown solver '" + s + "' (em, icm, hybrid)");
}

// A json config file provides defaults; arguments on the command line win.
// Keys mirror the long option names.  The file's settings are spliced in
// right after the subcommand (every option takes its last occurrence).
std::vector<std::string> inject_config(std::vector<std::string> args) {
  if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j = json::parse(in);
  if (!j.is_object()) throw std::runtime_error("config file must hold a json object");
  std::vector<std::string> out{args[0]};
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw std::runtime_error("config files cannot nest");
    out.push_back("--" + key);
    if (value.is_string())
      out.push_back(value.get<std::string>());
    else if (value.is_number() || value.is_boolean())
      out.push_back(value.dump());
    else
      throw std::runtime_error("config key '" + key + "' must be a number or a string");
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

// Observations: one value per line, or csv whose header names a column
// "sqrt_area" or "area" (plain areas are converted).  Bad values report the
// file line they came from.
std::vector<double> read_sections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0, col = 0;
  bool is_area = false, saw_first = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_first) {
      saw_first = true;
      bool numeric = true;
      try {
        std::stod(line);
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) {
        const auto names = split_on(line, ',');
        auto find = [&](const std::string& want) {
          return int(std::find(names.begin(), names.end(), want) - names.begin());
        };
        col = find("sqrt_area");
        if (col == int(names.size())) {
          col = find("area");
          is_area = true;
          if (col == int(names.size()))
            throw std::runtime_error(path + " has no sqrt_area or area column");
        }
        continue;
      }
    }
    const auto cells = split_on(line, ',');
    if (col >= int(cells.size()))
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": missing column " + std::to_string(col + 1));
    const std::string& cell = cells[col];
    double v;
    try {
      v = std::stod(cell);
    } catch (const std::exception&) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": cannot parse '" + cell + "'");
    }
    if (!std::isfinite(v))
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": section area must be finite");
    if (v < 0)
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": negative area " + cell);
    if (v == 0)
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": section area must be positive");
    out.push_back(is_area ? std::sqrt(v) : v);
  }
  if (out.empty()) throw std::runtime_error(path + " holds no observations");
  return out;
}

struct RefSource {
  bool analytic = false;
  std::optional<ReferenceDistribution> ref;
};

// --ref loads a cache file; otherwise the shape decides: the plain ball is
// handled in closed form, anything else is sampled (through the cache
// directory when one is given)
RefSource resolve_reference(const std::string& shape, const std::string& ref_path,
                            std::int64_t ref_n, const std::string& cache_dir,
                            Rng& rng, int workers, int grid) {
  RefSource src;
  if (!ref_path.empty()) {
    src.ref = load_reference(ref_path);
    return src;
  }
  if (shape == "ball") {
    src.analytic = true;
    return src;
  }
  Polyhedron K = parse_shape(shape);
  Rng ref_rng = rng.split(1);
  if (!cache_dir.empty())
    src.ref = cached_reference(K, ref_n, cache_dir, ref_rng, workers, grid);
  else
    src.ref = fit_density(sample_reference(K, ref_n, ref_rng, workers), grid);
  return src;
}

json cdf_to_json(const StepCDF& c) {
  return json{{"atoms", c.atoms()}, {"probs", c.probs()}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("write to " + path + " failed");
}

struct CommonOpts {
  std::string shape = "ball";
  std::string ref_path;
  std::string cache_dir;
  std::int64_t ref_n = 100000;
  int workers = 0;
  int grid = 4096;
  std::uint64_t seed = 0;
  std::string config;  // consumed by inject_config; registered so help shows it

  void attach(CLI::App* c, bool with_ref) {
    c->add_option("--shape", shape,
                  "reference particle: ball, ball:<frequency>, cube, tetrahedron, "
                  "dodecahedron, or an .off file");
    c->add_option("--seed", seed, "root seed for every random stream");
    c->add_option("--config", config, "json file with option defaults");
    if (with_ref) {
      c->add_option("--ref", ref_path, "reference cache file (.szuf) to load");
      c->add_option("--ref-n", ref_n, "section samples for a fresh reference");
      c->add_option("--cache-dir", cache_dir, "directory of reusable reference caches");
      c->add_option("--workers", workers, "sampling threads, 0 = all cores");
      c->add_option("--grid", grid, "density grid size");
    }
  }
};

struct SolverOpts {
  std::string solver = "hybrid";
  double eps_stop = 1e-4;
  int stable_iters = 10;
  int max_iters = 5000;

  void attach(CLI::App* c) {
    c->add_option("--solver", solver, "em, icm, or hybrid");
    c->add_option("--eps-stop", eps_stop, "sup-norm change threshold");
    c->add_option("--stable-iters", stable_iters, "small changes in a row to stop");
    c->add_option("--max-iters", max_iters, "iteration cap");
  }

  SolverConfig build() const {
    SolverConfig cfg;
    cfg.method = parse_method(solver);
    cfg.eps_stop = eps_stop;
    cfg.stable_iters = stable_iters;
    cfg.max_iters = max_iters;
    return cfg;
  }
};

int run_refdist(const CommonOpts& com, std::int64_t n, const std::string& out,
                const std::string& csv) {
  if (n < 1000) {
    std::cerr << "warning: " << n
              << " reference samples cannot support a density fit; use at least 1000\n";
    return 2;
  }
  if (com.shape == "ball") {
    std::cerr << "the unit ball has a closed-form section law and needs no cache; "
                 "use ball:<frequency> for a mesh\n";
    return 2;
  }
  Polyhedron K = parse_shape(com.shape);
  Rng rng(com.seed);
  ReferenceDistribution ref =
      fit_density(sample_reference(K, n, rng, com.workers), com.grid);
  save_reference(ref, out);
  if (!csv.empty()) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ref.sqrt_samples().size());
    for (double s : ref.sqrt_samples()) rows.push_back({s});
    write_csv(csv, {"sqrt_area"}, rows);
  }
  std::ostringstream hash;
  hash << std::hex << ref.shape_hash();
  std::cout << "reference for " << com.shape << ": " << n << " sections, s_max "
            << ref.s_max_hat() << ", bandwidth " << ref.bandwidth() << ", shape hash "
            << hash.str() << ", saved to " << out << "\n";
  return 0;
}

int run_forward(const CommonOpts& com, const std::string& dist, std::int64_t n,
                const std::string& out) {
  ParametricSize law = parse_dist(dist);
  Rng rng(com.seed);
  RefSource src = resolve_reference(com.shape, com.ref_path, com.ref_n, com.cache_dir,
                                    rng, com.workers, com.grid);
  Rng draw = rng.split(2);
  std::vector<double> obs = src.analytic
                                ? forward_sample(AnalyticBall{}, law, n, draw)
                                : forward_sample(*src.ref, law, n, draw);
  std::vector<std::vector<double>> rows;
  rows.reserve(obs.size());
  for (double s : obs) rows.push_back({s});
  write_csv(out, {"sqrt_area"}, rows);
  const std::string what = com.ref_path.empty() ? com.shape : com.ref_path;
  std::cout << n << " sections of " << what << " particles with " << dist
            << " sizes, saved to " << out << "\n";
  return 0;
}

int run_estimate(const CommonOpts& com, const SolverOpts& sol, const std::string& data,
                 const std::string& out, const std::string& csv_size,
                 const std::string& csv_biased) {
  std::vector<double> obs = read_sections(data);
  Rng rng(com.seed);
  RefSource src = resolve_reference(com.shape, com.ref_path, com.ref_n, com.cache_dir,
                                    rng, com.workers, com.grid);
  SolverConfig cfg = sol.build();
  EstimateResult r = src.analytic ? estimate_H(AnalyticBall{}, obs, cfg)
                                  : estimate_H(*src.ref, obs, cfg);

  json doc{
      {"n", obs.size()},
      {"solver", sol.solver},
      {"fit",
       {{"iterations", r.fit_state.iterations},
        {"converged", r.fit_state.converged},
        {"ever_stalled", r.fit_state.ever_stalled},
        {"loglik", r.fit_state.loglik},
        {"kkt_residual", r.fit_state.kkt_residual}}},
      {"t_hat", r.selection.t_hat},
      {"selection",
       {{"candidate_ts", r.selection.candidate_ts},
        {"l1_distances", r.selection.l1_distances}}},
      {"biased", cdf_to_json(r.biased)},
      {"biased_truncated", cdf_to_json(r.biased_truncated)},
      {"size_cdf", cdf_to_json(r.size_cdf)},
  };
  if (!out.empty()) write_text(out, doc.dump(2) + "\n");

  auto dump_cdf = [](const std::string& path, const StepCDF& c) {
    std::vector<std::vector<double>> rows;
    for (size_t j = 0; j < c.atoms().size(); ++j)
      rows.push_back({c.atoms()[j], c.probs()[j], c.cum()[j]});
    write_csv(path, {"atom", "prob", "cum"}, rows);
  };
  if (!csv_size.empty()) dump_cdf(csv_size, r.size_cdf);
  if (!csv_biased.empty()) dump_cdf(csv_biased, r.biased);

  int support = 0;
  for (double p : r.size_cdf.probs())
    if (p > 1e-10) ++support;
  std::cout << "fit " << obs.size() << " sections: loglik " << r.fit_state.loglik
            << ", " << r.fit_state.iterations << " iterations"
            << (r.fit_state.converged ? "" : " (not converged)") << ", kkt residual "
            << r.fit_state.kkt_residual << ", threshold " << r.selection.t_hat << ", "
            << support << " atoms in the size estimate\n";
  return 0;
}

int run_reproduce(const CommonOpts& com, const SolverOpts& sol, const std::string& dist,
                  std::int64_t n, int reps, const std::string& out,
                  const std::string& json_out) {
  ParametricSize law = parse_dist(dist);
  Rng rng(com.seed);
  RefSource src = resolve_reference(com.shape, com.ref_path, com.ref_n, com.cache_dir,
                                    rng, com.workers, com.grid);
  ExperimentConfig ec;
  ec.n = n;
  ec.reps = reps;
  ec.seed = rng.split(3).seed();
  ec.solver = sol.build();
  ExperimentSummary s = src.analytic ? run_experiment(AnalyticBall{}, law, ec)
                                     : run_experiment(*src.ref, law, ec);

  std::ofstream of(out);
  if (!of) throw std::runtime_error("cannot open " + out + " for writing");
  of << std::setprecision(17);
  of << "shape,dist,n,reps,seed,biased_q03,biased_median,biased_q98,"
        "size_q03,size_median,size_q98,mean_iterations,mean_fit_seconds\n";
  of << com.shape << ',' << dist << ',' << n << ',' << reps << ',' << com.seed << ','
     << s.biased_q03 << ',' << s.biased_median << ',' << s.biased_q98 << ','
     << s.size_q03 << ',' << s.size_median << ',' << s.size_q98 << ','
     << s.mean_iterations << ',' << s.mean_fit_seconds << '\n';
  if (!of.flush()) throw std::runtime_error("write to " + out + " failed");

  if (!json_out.empty()) {
    json reps_j = json::array();
    for (const RepResult& r : s.reps)
      reps_j.push_back({{"err_biased", r.err_biased},
                        {"err_size", r.err_size},
                        {"t_hat", r.t_hat},
                        {"iterations", r.iterations},
                        {"converged", r.converged},
                        {"fit_seconds", r.fit_seconds},
                        {"total_seconds", r.total_seconds}});
    json doc{{"shape", com.shape},
             {"dist", dist},
             {"n", n},
             {"reps", reps},
             {"seed", com.seed},
             {"solver", sol.solver},
             {"summary",
              {{"biased_q03", s.biased_q03},
               {"biased_median", s.biased_median},
               {"biased_q98", s.biased_q98},
               {"size_q03", s.size_q03},
               {"size_median", s.size_median},
               {"size_q98", s.size_q98},
               {"mean_iterations", s.mean_iterations},
               {"mean_fit_seconds", s.mean_fit_seconds}}},
             {"replications", reps_j}};
    write_text(json_out, doc.dump(2) + "\n");
  }

  std::cout << com.shape << " + " << dist << ", n=" << n << ", " << reps
            << " replications: median sup error " << s.biased_median
            << " (biased), " << s.size_median << " (size), mean "
            << s.mean_iterations << " iterations, " << s.mean_fit_seconds
            << " s per fit\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"size distributions of convex particles from planar section areas"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  CommonOpts rd_com, fw_com, es_com, rp_com;
  SolverOpts es_sol, rp_sol;
  std::int64_t rd_n = 1000000, fw_n = 1000, rp_n = 1000;
  int rp_reps = 100;
  std::string rd_out, rd_csv, fw_dist = "exp:1", fw_out, es_data, es_out,
              es_csv_size, es_csv_biased, rp_dist = "exp:1", rp_out, rp_json;

  CLI::App* rd = app.add_subcommand(
      "refdist", "sample a reference section-area distribution and cache it");
  rd_com.attach(rd, false);
  rd->add_option("--n", rd_n, "number of section samples");
  rd->add_option("--workers", rd_com.workers, "sampling threads, 0 = all cores");
  rd->add_option("--grid", rd_com.grid, "density grid size");
  rd->add_option("--out", rd_out, "output cache file (.szuf)")->required();
  rd->add_option("--csv", rd_csv, "also write the samples as csv");

  CLI::App* fw = app.add_subcommand(
      "forward", "sample synthetic sections from a known size law");
  fw_com.attach(fw, true);
  fw->add_option("--dist", fw_dist, "size law: exp:<rate> or lognormal:<mu>:<sigma>");
  fw->add_option("--n", fw_n, "number of sections");
  fw->add_option("--out", fw_out, "output csv")->required();

  CLI::App* es = app.add_subcommand(
      "estimate", "estimate the size distribution from observed sections");
  es_com.attach(es, true);
  es_sol.attach(es);
  es->add_option("--data", es_data, "csv of observed sections")->required();
  es->add_option("--out", es_out, "full estimate as json");
  es->add_option("--csv-size", es_csv_size, "size CDF estimate as csv");
  es->add_option("--csv-biased", es_csv_biased, "biased size CDF estimate as csv");

  CLI::App* rp = app.add_subcommand(
      "reproduce", "replicate simulation experiments and summarize the errors");
  rp_com.attach(rp, true);
  rp_sol.attach(rp);
  rp->add_option("--dist", rp_dist, "size law: exp:<rate> or lognormal:<mu>:<sigma>");
  rp->add_option("--n", rp_n, "sections per replication");
  rp->add_option("--reps", rp_reps, "number of replications");
  rp->add_option("--out", rp_out, "summary csv")->required();
  rp->add_option("--json", rp_json, "per-replication detail as json");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = inject_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (rd->parsed()) return run_refdist(rd_com, rd_n, rd_out, rd_csv);
    if (fw->parsed()) return run_forward(fw_com, fw_dist, fw_n, fw_out);
    if (es->parsed())
      return run_estimate(es_com, es_sol, es_data, es_out, es_csv_size, es_csv_biased);
    if (rp->parsed())
      return run_reproduce(rp_com, rp_sol, rp_dist, rp_n, rp_reps, rp_out, rp_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
