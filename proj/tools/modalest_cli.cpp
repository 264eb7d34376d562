// Copyright 2026 The modalest Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
//
// modalest command-line tool.
//
// Exit codes: 0 success, 2 usage or input error, 3 resource guard,
// 4 numerical failure. Failures print one stderr line of the form
//   modalest-error kind=<usage|input|resource|numerical|internal> exit=<code> msg=<text>
//
// Option precedence: command-line flag > --config file > built-in default.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "modalest.hpp"

namespace {

using namespace modalest;
using Json = nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitNumerical = 4;

struct Global {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  CLI::Option* seed_opt = nullptr;
};

/// Records the files and resolved options of one run.
class Manifest {
 public:
  Manifest(std::string command, const CLI::App* app, const Global& g, std::vector<std::string> argv)
      : command_(std::move(command)), app_(app), global_(g), argv_(std::move(argv)),
        start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void seeds(std::vector<std::uint64_t> s) { seeds_ = std::move(s); }
  Json& extra() { return extra_; }

  void write(const std::string& path) {
    output(path);
    Json j;
    j["command"] = command_;
    j["tool_version"] = kVersion;
    j["argv"] = argv_;
    j["config"] = resolved();
    j["config_ini"] = app_->config_to_str(true, false);
    j["seeds"] = seeds_.empty() ? std::vector<std::uint64_t>{global_.seed} : seeds_;
    j["jobs"] = global_.jobs;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    if (!extra_.is_null()) j["results"] = extra_;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(path, j.dump(2) + "\n");
  }

 private:
  Json resolved() const {
    Json j = Json::object();
    for (const CLI::Option* opt : app_->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& res = opt->results();
        std::string joined;
        for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? " " : "") + res[i];
        j[name] = joined;
      } else {
        j[name] = opt->get_default_str();
      }
    }
    j["seed"] = global_.seed;
    return j;
  }

  std::string command_;
  const CLI::App* app_;
  const Global& global_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::uint64_t> seeds_;
  Json extra_;
};

/// Config files deliver comma lists as arrays; rejoin them.
using ListArg = std::vector<std::string>;

std::string join(const ListArg& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

/// Parses "1:30", "5", "1,2,8:10".
std::vector<Index> parse_index_list(const ListArg& parts, const std::string& what) {
  const std::string text = join(parts);
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  auto to_index = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<Index>(v);
    } catch (const std::exception&) {
      throw InputError(what + ": cannot parse '" + s + "' in '" + text + "'");
    }
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      out.push_back(to_index(item));
      continue;
    }
    const Index lo = to_index(item.substr(0, colon));
    const Index hi = to_index(item.substr(colon + 1));
    if (hi < lo) throw InputError(what + ": empty range '" + item + "'");
    for (Index v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const ListArg& parts, const std::string& what) {
  const std::string text = join(parts);
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(what + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

std::vector<std::string> split_names(const ListArg& parts) {
  const std::string text = join(parts);
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_first_line(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  return line;
}

/// Basis files hold [Phi | mean] as N x (n + 1).
void save_basis(const ModalBasis& b, const std::string& path) {
  Matrix m(b.n_dims(), b.n_modes() + 1);
  m.leftCols(b.n_modes()) = b.phi;
  m.col(b.n_modes()) = b.mean;
  save_matrix(m, path, format_from_path(path), {{"kind", "basis"}, {"samples", std::to_string(b.n_samples_used)}});
}

ModalBasis load_basis(const std::string& path) {
  HeaderTags tags;
  const Matrix m = load_matrix(path, format_from_path(path), &tags);
  if (const auto it = tags.find("kind"); it != tags.end() && it->second != "basis") {
    throw InputError(path + ": expected kind=basis, found kind=" + it->second);
  }
  if (m.cols() < 2) throw InputError(path + ": a basis file needs at least one mode plus the mean column");
  ModalBasis b;
  b.phi = m.leftCols(m.cols() - 1);
  b.mean = m.col(m.cols() - 1);
  b.singular_values = Vector::Zero(b.phi.cols());
  return b;
}

PriorCovariance load_prior(const std::string& path) {
  HeaderTags tags;
  const Matrix m = load_matrix(path, format_from_path(path), &tags);
  if (const auto it = tags.find("kind"); it != tags.end() && it->second != "prior") {
    throw InputError(path + ": expected kind=prior, found kind=" + it->second);
  }
  if (m.rows() != m.cols()) throw InputError(path + ": prior must be square");
  const bool diag = (m - Matrix(m.diagonal().asDiagonal())).isZero(0.0);
  return PriorCovariance{m, diag};
}

SensorSelection load_selection(const std::string& path) {
  return parse_selection_csv_line(read_first_line(path)).selection;
}

struct DatasetOptions {
  std::string kind = "harmonic";
  std::string path;
  HarmonicConfig harmonic;
  std::string amplitude = "std";
};

void add_dataset_options(CLI::App* sub, DatasetOptions& d) {
  sub->add_option("--dataset", d.kind, "harmonic or file")->check(CLI::IsMember({"harmonic", "file"}))
      ->capture_default_str();
  sub->add_option("--data", d.path, "Snapshot file for --dataset file");
  sub->add_option("--grid", d.harmonic.n_grid, "Grid points N")->capture_default_str();
  sub->add_option("--terms", d.harmonic.n_terms, "Harmonic terms J")->capture_default_str();
  sub->add_option("--samples", d.harmonic.n_samples, "Snapshots p")->capture_default_str();
  sub->add_option("--spectral-break", d.harmonic.spectral_break, "Last term with 1/j amplitude")
      ->capture_default_str();
  sub->add_option("--amplitude", d.amplitude, "Amplitude parameter: std or variance")
      ->check(CLI::IsMember({"std", "variance"}))
      ->capture_default_str();
  sub->add_option("--train-fraction", d.harmonic.train_fraction, "Training share of the samples")
      ->capture_default_str();
}

DatasetSpec to_spec(const DatasetOptions& d) {
  if (d.kind == "file") {
    if (d.path.empty()) throw InputError("--dataset file needs --data <path>");
    return FileDataset{d.path, d.harmonic.train_fraction};
  }
  HarmonicConfig h = d.harmonic;
  h.amplitude_param = d.amplitude == "variance" ? AmplitudeParam::kVariance : AmplitudeParam::kStd;
  return h;
}

std::string sibling(const std::string& prefix, const std::string& suffix) { return prefix + suffix; }

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out;
  HarmonicConfig cfg;
  std::string amplitude = "std";
};

void run_generate(const GenerateArgs& a, const Global& g, Manifest& m) {
  HarmonicConfig cfg = a.cfg;
  cfg.seed = g.seed;
  cfg.amplitude_param = a.amplitude == "variance" ? AmplitudeParam::kVariance : AmplitudeParam::kStd;
  save_snapshots(generate_harmonic(cfg), a.out, format_from_path(a.out));
  m.output(a.out);
  m.write(sibling(a.out, ".manifest.json"));
}

struct PodArgs {
  std::string data;
  Index modes = 20;
  double train_fraction = 0.75;
  std::string basis_out;
  std::string prior_out;
  std::string test_out;
  std::string prior = "sample";
  double prior_scale = 1.0;
};

void run_pod(const PodArgs& a, Manifest& m) {
  const SnapshotMatrix x = load_snapshots(a.data, format_from_path(a.data));
  m.input(a.data);
  auto [train, test] = split(x, a.train_fraction);
  const ModalBasis basis = pod_basis(center(train), a.modes);
  const PriorPreset preset = a.prior == "singular"   ? PriorPreset::kSingularValues
                             : a.prior == "identity" ? PriorPreset::kScaledIdentity
                                                     : PriorPreset::kSampleCovariance;
  const PriorCovariance prior = prior_preset(basis, preset, a.prior_scale);
  save_basis(basis, a.basis_out);
  m.output(a.basis_out);
  save_matrix(prior.gamma, a.prior_out, format_from_path(a.prior_out), {{"kind", "prior"}});
  m.output(a.prior_out);
  if (!a.test_out.empty()) {
    save_snapshots(test, a.test_out, format_from_path(a.test_out));
    m.output(a.test_out);
  }
  std::vector<double> sv(basis.singular_values.data(), basis.singular_values.data() + basis.n_modes());
  m.extra()["singular_values"] = sv;
  m.write(sibling(a.basis_out, ".manifest.json"));
}

struct PlaceArgs {
  std::string basis;
  std::string prior;
  std::string method;
  Index k = 5;
  double sigma = 0.1;
  std::uint64_t budget = 1'000'000;
  std::string out;
};

void run_place(const PlaceArgs& a, const Global& g, Manifest& m) {
  const auto method = parse_placement_method(a.method);
  if (!method) throw InputError("unknown placement method '" + a.method + "'");
  const ModalBasis basis = load_basis(a.basis);
  const PriorCovariance prior = load_prior(a.prior);
  m.input(a.basis);
  m.input(a.prior);
  if (prior.size() != basis.n_modes()) throw InputError("prior size does not match the number of modes");
  const NoiseModel noise{a.sigma};
  noise.validate();
  const bool needs_sigma = *method != PlacementMethod::kCpqr;
  if (needs_sigma && a.sigma <= 0.0) throw InputError("--sigma must be positive for " + a.method);
  if (a.k < 1 || a.k > basis.n_dims()) throw InputError("--k must lie in [1, N]");

  PlacementResult r;
  switch (*method) {
    case PlacementMethod::kCpqr: r = place_cpqr(basis, a.k); break;
    case PlacementMethod::kQmap: r = place_qmap(basis, prior, noise, a.k); break;
    case PlacementMethod::kGreedyD: r = place_greedy_d(basis, prior, noise, a.k); break;
    case PlacementMethod::kBruteD: r = place_brute_d(basis, prior, noise, a.k, a.budget, g.jobs); break;
  }
  write_text(a.out, selection_csv_line(r, g.seed) + "\n");
  m.output(a.out);
  if (a.sigma > 0.0) {
    const double theta = theta_d(basis, r.selection, prior, noise);
    const double gain = info_gain(basis, r.selection, prior, noise);
    std::cout << "theta_d," << detail::format_double(theta) << "\n";
    std::cout << "info_gain," << detail::format_double(gain) << "\n";
    m.extra()["theta_d"] = theta;
    m.extra()["info_gain"] = gain;
  }
  m.extra()["sensors"] = r.selection.indices();
  m.write(sibling(a.out, ".manifest.json"));
}

struct ReconstructArgs {
  std::string basis;
  std::string prior;
  std::string selection;
  std::string data;
  std::string method = "map";
  double sigma = 0.1;
  bool add_noise = false;
  std::string out;
  std::string errors;
};

void run_reconstruct(const ReconstructArgs& a, const Global& g, Manifest& m) {
  const ModalBasis basis = load_basis(a.basis);
  const SensorSelection sel = load_selection(a.selection);
  const SnapshotMatrix clean = load_snapshots(a.data, format_from_path(a.data));
  m.input(a.basis);
  m.input(a.selection);
  m.input(a.data);
  if (sel.n_locations() != basis.n_dims()) throw InputError("selection and basis disagree on N");
  if (clean.n_dims() != basis.n_dims()) throw InputError("data and basis disagree on N");
  const NoiseModel noise{a.sigma};
  noise.validate();
  const SnapshotMatrix measured = a.add_noise ? add_noise(clean, noise, g.seed) : clean;

  std::optional<Posterior> post;
  if (a.method == "map") {
    if (a.prior.empty()) throw InputError("map reconstruction needs --prior");
    if (a.sigma <= 0.0) throw InputError("map reconstruction needs --sigma > 0");
    const PriorCovariance prior = load_prior(a.prior);
    m.input(a.prior);
    post = build_posterior(basis, sel, prior, noise);
  }
  Matrix estimates(basis.n_dims(), clean.n_samples());
  Table errors;
  errors.columns = {"sample", "rel_error"};
  std::vector<double> errs;
  for (Index i = 0; i < clean.n_samples(); ++i) {
    const Vector y = sel.entries_of(measured.data.col(i));
    const Estimate e = post ? map_estimate(*post, basis, sel, y) : deim_estimate(basis, sel, y);
    estimates.col(i) = e.full_state;
    const double err = relative_error(e.full_state, clean.data.col(i));
    errs.push_back(err);
    errors.rows.push_back({std::to_string(i), detail::format_double(err)});
  }
  save_matrix(estimates, a.out, format_from_path(a.out), {{"kind", "estimates"}});
  m.output(a.out);
  const std::string err_path = a.errors.empty() ? sibling(a.out, ".errors.csv") : a.errors;
  write_text(err_path, errors.to_csv());
  m.output(err_path);
  const ErrorStats stats = summarize(errs);
  std::cout << "mean_rel_error," << detail::format_double(stats.mean) << "\n";
  std::cout << "std_rel_error," << detail::format_double(stats.std) << "\n";
  m.extra()["mean_rel_error"] = stats.mean;
  m.extra()["std_rel_error"] = stats.std;
  m.write(sibling(a.out, ".manifest.json"));
}

struct RiskArgs {
  std::string basis;
  std::string prior;
  std::string selection;
  std::string explicit_a;
  double sigma = 0.1;
  bool self_check = false;
  std::int64_t mc_draws = 100'000;
  std::string out;
};

void run_risk(const RiskArgs& a, const Global& g, Manifest& m) {
  const PriorCovariance prior = load_prior(a.prior);
  m.input(a.prior);
  Matrix amat;
  if (!a.explicit_a.empty()) {
    amat = load_matrix(a.explicit_a, format_from_path(a.explicit_a));
    m.input(a.explicit_a);
  } else {
    if (a.basis.empty() || a.selection.empty()) {
      throw InputError("risk needs either --explicit-a or both --basis and --selection");
    }
    amat = load_selection(a.selection).rows_of(load_basis(a.basis).phi);
    m.input(a.basis);
    m.input(a.selection);
  }
  if (amat.cols() != prior.size()) throw InputError("A has " + std::to_string(amat.cols()) +
                                                    " columns but the prior is " + std::to_string(prior.size()) +
                                                    " x " + std::to_string(prior.size()));
  const NoiseModel noise{a.sigma};
  if (a.sigma <= 0.0) throw InputError("--sigma must be positive");
  const RiskReport r = risk_report(amat, prior, noise);
  write_text(a.out, std::string(kRiskCsvHeader) + "\n" + to_csv_row(r) + "\n");
  m.output(a.out);
  std::cout << kRiskCsvHeader << "\n" << to_csv_row(r) << "\n";

  if (a.self_check) {
    if (const std::string bad = check_invariants(r); !bad.empty()) throw NumericalError("self-check: " + bad);
    const auto map_mc = monte_carlo_risk(RiskEstimator::kMap, amat, prior, noise, a.mc_draws, g.seed);
    const auto ls_mc = monte_carlo_risk(RiskEstimator::kDeim, amat, prior, noise, a.mc_draws, g.seed + 1);
    const double z_map = std::abs(map_mc.mean - r.risk_map) / std::max(map_mc.std_error, 1e-300);
    const double z_ls = std::abs(ls_mc.mean - r.risk_ls) / std::max(ls_mc.std_error, 1e-300);
    m.extra()["monte_carlo"] = {{"risk_map", map_mc.mean}, {"risk_map_se", map_mc.std_error},
                                {"risk_ls", ls_mc.mean},   {"risk_ls_se", ls_mc.std_error}};
    if (z_map > 4.0 || z_ls > 4.0) {
      throw NumericalError("self-check: analytic risk disagrees with Monte Carlo (z_map = " + std::to_string(z_map) +
                           ", z_ls = " + std::to_string(z_ls) + ")");
    }
    std::cout << "self_check,ok\n";
  }
  m.write(sibling(a.out, ".manifest.json"));
}

struct ExperimentArgs {
  DatasetOptions dataset;
  std::string sweep = "error";
  double sigma = 0.1;
  ListArg modes{"20"};
  ListArg sensors{"5"};
  ListArg methods{"qdeim", "greedy_d_map"};
  ListArg seeds{"0"};
  std::uint64_t budget = 1'000'000;
  bool qdeim_follow_k = true;
  bool svg = true;
  std::string out;
};

std::vector<std::uint64_t> resolve_seeds(const ListArg& list, const Global& g) {
  if (g.seed_opt->count() > 0) return {g.seed};
  std::vector<std::uint64_t> out;
  for (const Index s : parse_index_list(list, "seeds")) {
    if (s < 0) throw InputError("seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  return out;
}

void write_table_outputs(const Table& t, const std::string& prefix, Manifest& m) {
  write_text(prefix + ".csv", t.to_csv());
  m.output(prefix + ".csv");
}

void run_experiment(const ExperimentArgs& a, const Global& g, Manifest& m) {
  ExperimentConfig cfg;
  cfg.dataset = to_spec(a.dataset);
  cfg.noise = NoiseModel{a.sigma};
  cfg.mode_range = parse_index_list(a.modes, "modes");
  cfg.sensor_range = parse_index_list(a.sensors, "sensors");
  cfg.methods.clear();
  for (const auto& name : split_names(a.methods)) {
    const auto method = parse_sweep_method(name);
    if (!method) throw InputError("unknown sweep method '" + name + "'");
    cfg.methods.push_back(*method);
  }
  cfg.seeds = resolve_seeds(a.seeds, g);
  cfg.brute_budget = a.budget;
  cfg.qdeim_modes_follow_k = a.qdeim_follow_k;
  cfg.jobs = g.jobs;
  if (a.dataset.kind == "file") m.input(a.dataset.path);
  m.seeds(cfg.seeds);

  Json meta = to_json(cfg);
  meta["sweep"] = a.sweep;
  meta["conventions"] = sweep_conventions();
  meta["tool_version"] = kVersion;

  if (a.sweep == "error") {
    const Table t = to_table(run_error_sweep(cfg));
    write_table_outputs(t, a.out, m);
    if (a.svg) {
      const bool vary_n = cfg.mode_range.size() > 1;
      render_svg_lines(t, vary_n ? "n" : "k", "mean_rel_error", "method", a.out + ".svg", "std_rel_error");
      m.output(a.out + ".svg");
    }
  } else {
    validate(cfg, dataset_dims(cfg.dataset));
    const Table t = to_table(run_risk_sweep(cfg.dataset, cfg.noise, cfg.sensor_range.front(), cfg.mode_range,
                                            cfg.seeds.front()));
    write_table_outputs(t, a.out, m);
    if (a.svg) {
      render_svg_lines(t, "n", "delta_noise", "k", a.out + ".svg", "");
      m.output(a.out + ".svg");
      render_svg_lines(t, "n", "delta_prior", "k", a.out + ".prior.svg", "");
      m.output(a.out + ".prior.svg");
    }
  }
  write_text(a.out + ".meta.json", meta.dump(2) + "\n");
  m.output(a.out + ".meta.json");
  m.write(sibling(a.out, ".manifest.json"));
}

struct DiceArgs {
  DatasetOptions dataset;
  Index k = 5;
  ListArg modes{"1:30"};
  ListArg sigmas{"0.0001", "0.001", "0.01", "0.1"};
  bool svg = true;
  std::string out;
};

void run_dice(const DiceArgs& a, const Global& g, Manifest& m) {
  const DatasetSpec spec = to_spec(a.dataset);
  if (a.dataset.kind == "file") m.input(a.dataset.path);
  const auto modes = parse_index_list(a.modes, "modes");
  const auto sigmas = parse_double_list(a.sigmas, "sigmas");
  for (const double s : sigmas) {
    if (!(s > 0.0)) throw InputError("sigmas must be positive");
  }
  const Table t = to_table(run_dice_grid(spec, a.k, modes, sigmas, g.seed, g.jobs));
  write_table_outputs(t, a.out, m);
  if (a.svg) {
    render_svg_lines(t, "n", "dice", "sigma", a.out + ".svg", "");
    m.output(a.out + ".svg");
  }
  m.write(sibling(a.out, ".manifest.json"));
}

int fail(const std::string& kind, int code, const std::string& msg) {
  std::string flat = msg;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::cerr << "modalest-error kind=" << kind << " exit=" << code << " msg=" << flat << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse sensor placement and Bayesian state estimation on modal bases"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file; [section] names match subcommands, flags override it");

  Global g;
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate the harmonic snapshot benchmark");
  c_gen->add_option("--out", gen.out, "Snapshot file (.csv or .bin)")->required();
  c_gen->add_option("--grid", gen.cfg.n_grid, "Grid points N")->capture_default_str();
  c_gen->add_option("--terms", gen.cfg.n_terms, "Harmonic terms J")->capture_default_str();
  c_gen->add_option("--samples", gen.cfg.n_samples, "Snapshots p")->capture_default_str();
  c_gen->add_option("--spectral-break", gen.cfg.spectral_break, "Last term with 1/j amplitude")
      ->capture_default_str();
  c_gen->add_option("--amplitude", gen.amplitude, "std or variance")
      ->check(CLI::IsMember({"std", "variance"}))
      ->capture_default_str();

  PodArgs pod;
  auto* c_pod = app.add_subcommand("pod", "Build a POD basis and prior from snapshots");
  c_pod->add_option("--data", pod.data, "Snapshot file")->required();
  c_pod->add_option("--modes", pod.modes, "Number of modes n")->capture_default_str();
  c_pod->add_option("--train-fraction", pod.train_fraction, "Training share")->capture_default_str();
  c_pod->add_option("--basis-out", pod.basis_out, "Basis file [Phi | mean]")->required();
  c_pod->add_option("--prior-out", pod.prior_out, "Prior covariance file")->required();
  c_pod->add_option("--test-out", pod.test_out, "Optional file for the held-out test snapshots");
  c_pod->add_option("--prior", pod.prior, "sample, singular or identity")
      ->check(CLI::IsMember({"sample", "singular", "identity"}))
      ->capture_default_str();
  c_pod->add_option("--prior-scale", pod.prior_scale, "Scale for the identity prior")->capture_default_str();

  PlaceArgs place;
  auto* c_place = app.add_subcommand("place", "Choose sensor locations");
  c_place->add_option("--basis", place.basis, "Basis file")->required();
  c_place->add_option("--prior", place.prior, "Prior file")->required();
  c_place->add_option("--method", place.method, "cpqr, qmap, greedy_d or brute_d")->required();
  c_place->add_option("--k", place.k, "Number of sensors")->capture_default_str();
  c_place->add_option("--sigma", place.sigma, "Noise standard deviation")->capture_default_str();
  c_place->add_option("--budget", place.budget, "Brute-force evaluation budget")->capture_default_str();
  c_place->add_option("--out", place.out, "Selection CSV")->required();

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Estimate full states from sensor readings");
  c_rec->add_option("--basis", rec.basis, "Basis file")->required();
  c_rec->add_option("--prior", rec.prior, "Prior file (map)");
  c_rec->add_option("--selection", rec.selection, "Selection CSV")->required();
  c_rec->add_option("--data", rec.data, "Noiseless states; readings are taken at the sensors")->required();
  c_rec->add_option("--method", rec.method, "deim or map")->check(CLI::IsMember({"deim", "map"}))
      ->capture_default_str();
  c_rec->add_option("--sigma", rec.sigma, "Noise standard deviation")->capture_default_str();
  c_rec->add_flag("--add-noise", rec.add_noise, "Add seeded noise to the readings");
  c_rec->add_option("--out", rec.out, "Estimates file")->required();
  c_rec->add_option("--errors", rec.errors, "Error table CSV (default <out>.errors.csv)");

  RiskArgs risk;
  auto* c_risk = app.add_subcommand("risk", "Bayes risk report for one sensor set");
  c_risk->add_option("--basis", risk.basis, "Basis file");
  c_risk->add_option("--selection", risk.selection, "Selection CSV");
  c_risk->add_option("--explicit-a", risk.explicit_a, "Use this k x n matrix as A directly");
  c_risk->add_option("--prior", risk.prior, "Prior file")->required();
  c_risk->add_option("--sigma", risk.sigma, "Noise standard deviation")->capture_default_str();
  c_risk->add_flag("--self-check", risk.self_check, "Verify invariants and compare against Monte Carlo");
  c_risk->add_option("--mc-draws", risk.mc_draws, "Monte Carlo draws for --self-check")->capture_default_str();
  c_risk->add_option("--out", risk.out, "Risk report CSV")->required();

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Error or risk sweep");
  add_dataset_options(c_exp, exp.dataset);
  c_exp->add_option("--sweep", exp.sweep, "error or risk")->check(CLI::IsMember({"error", "risk"}))
      ->capture_default_str();
  c_exp->add_option("--sigma", exp.sigma, "Noise standard deviation")->capture_default_str();
  c_exp->add_option("--modes", exp.modes, "Mode counts, e.g. 1:30 or 5,10,20")->capture_default_str();
  c_exp->add_option("--sensors", exp.sensors, "Sensor counts")->capture_default_str();
  c_exp->add_option("--methods", exp.methods, "Comma list of qdeim, qmap, greedy_d_map, d_map")
      ->capture_default_str();
  c_exp->add_option("--seeds", exp.seeds, "Seed list; --seed overrides it")->capture_default_str();
  c_exp->add_option("--budget", exp.budget, "Brute-force evaluation budget")->capture_default_str();
  c_exp->add_option("--qdeim-follow-k", exp.qdeim_follow_k, "Q-DEIM uses n = k modes")->capture_default_str();
  c_exp->add_option("--svg", exp.svg, "Also write SVG charts")->capture_default_str();
  c_exp->add_option("--out", exp.out, "Output prefix")->required();

  DiceArgs dc;
  auto* c_dice = app.add_subcommand("dice", "Dice agreement of Q-MAP and greedy D-optimal over (n, sigma)");
  add_dataset_options(c_dice, dc.dataset);
  c_dice->add_option("--k", dc.k, "Number of sensors")->capture_default_str();
  c_dice->add_option("--modes", dc.modes, "Mode counts")->capture_default_str();
  c_dice->add_option("--sigmas", dc.sigmas, "Comma list of noise levels")->capture_default_str();
  c_dice->add_option("--svg", dc.svg, "Also write an SVG chart")->capture_default_str();
  c_dice->add_option("--out", dc.out, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    return fail("usage", kExitUsage, e.what());
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    for (CLI::App* sub : app.get_subcommands()) {
      Manifest m(sub->get_name(), sub, g, args);
      const std::string& name = sub->get_name();
      if (name == "generate") run_generate(gen, g, m);
      else if (name == "pod") run_pod(pod, m);
      else if (name == "place") run_place(place, g, m);
      else if (name == "reconstruct") run_reconstruct(rec, g, m);
      else if (name == "risk") run_risk(risk, g, m);
      else if (name == "experiment") run_experiment(exp, g, m);
      else if (name == "dice") run_dice(dc, g, m);
    }
  } catch (const InputError& e) {
    return fail("input", kExitUsage, e.what());
  } catch (const ResourceError& e) {
    return fail("resource", kExitResource, e.what());
  } catch (const NumericalError& e) {
    return fail("numerical", kExitNumerical, e.what());
  } catch (const std::exception& e) {
    return fail("internal", kExitNumerical, e.what());
  }
  return 0;
}
