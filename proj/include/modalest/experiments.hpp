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
// End-to-end studies on a snapshot dataset: reconstruction-error sweeps
// over modes and sensors, risk-premium sweeps with random sensors, and
// Dice agreement grids between Q-MAP and greedy D-optimal placement.
//
// Conventions shared by every sweep:
//  - training data is clean; iid noise is added to the test split only;
//  - estimators see noisy measurements, errors are measured against the
//    clean test sample;
//  - the training mean is subtracted from measurements and added back to
//    the reconstruction.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/estimate.hpp"
#include "modalest/io.hpp"
#include "modalest/numerics.hpp"
#include "modalest/parallel.hpp"
#include "modalest/placement.hpp"
#include "modalest/pod.hpp"
#include "modalest/risk.hpp"
#include "modalest/rng.hpp"
#include "modalest/selection.hpp"

namespace modalest {

inline constexpr const char* kVersion = "0.1.0";

/// Placement + estimator pairings.
enum class SweepMethod { kQdeim, kQmap, kGreedyDMap, kDMap };

inline const char* to_string(SweepMethod m) {
  switch (m) {
    case SweepMethod::kQdeim: return "qdeim";
    case SweepMethod::kQmap: return "qmap";
    case SweepMethod::kGreedyDMap: return "greedy_d_map";
    case SweepMethod::kDMap: return "d_map";
  }
  return "?";
}

inline std::optional<SweepMethod> parse_sweep_method(const std::string& s) {
  if (s == "qdeim") return SweepMethod::kQdeim;
  if (s == "qmap") return SweepMethod::kQmap;
  if (s == "greedy_d_map") return SweepMethod::kGreedyDMap;
  if (s == "d_map") return SweepMethod::kDMap;
  return std::nullopt;
}

struct FileDataset {
  std::string path;
  double train_fraction = 0.75;
};

using DatasetSpec = std::variant<HarmonicConfig, FileDataset>;

struct ExperimentConfig {
  DatasetSpec dataset = HarmonicConfig{};
  NoiseModel noise{0.1};
  std::vector<Index> mode_range{20};
  std::vector<Index> sensor_range{5};
  std::vector<SweepMethod> methods{SweepMethod::kQdeim, SweepMethod::kGreedyDMap};
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t brute_budget = 1'000'000;
  /// Q-DEIM uses n = k modes regardless of the swept n.
  bool qdeim_modes_follow_k = true;
  unsigned jobs = 1;
};

/// One seed's worth of prepared data.
struct PreparedData {
  SnapshotMatrix train;
  SnapshotMatrix test_clean;
  SnapshotMatrix test_noisy;
  ModalBasis full_basis;  // as many modes as the sweep needs
  double noise_ratio = 0.0;
};

inline Index dataset_dims(const DatasetSpec& spec) {
  if (const auto* h = std::get_if<HarmonicConfig>(&spec)) return h->n_grid;
  const auto& f = std::get<FileDataset>(spec);
  return load_snapshots(f.path, format_from_path(f.path)).n_dims();
}

/// Train/test data with noisy test copies and a POD basis of `max_modes`
/// modes. The dataset seed and the noise seed are both `seed`.
inline PreparedData prepare_data(const DatasetSpec& spec, const NoiseModel& noise, std::uint64_t seed,
                                 Index max_modes) {
  SnapshotMatrix all;
  double fraction = 0.75;
  if (const auto* h = std::get_if<HarmonicConfig>(&spec)) {
    HarmonicConfig cfg = *h;
    cfg.seed = seed;
    all = generate_harmonic(cfg);
    fraction = cfg.train_fraction;
  } else {
    const auto& f = std::get<FileDataset>(spec);
    all = load_snapshots(f.path, format_from_path(f.path));
    fraction = f.train_fraction;
  }
  auto [train, test] = split(all, fraction);
  PreparedData out;
  out.test_noisy = add_noise(test, noise, seed);
  out.noise_ratio = mean_noise_ratio(test, out.test_noisy);
  out.full_basis = pod_basis(center(train), max_modes);
  out.train = std::move(train);
  out.test_clean = std::move(test);
  return out;
}

struct ErrorStats {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_sample;
};

inline ErrorStats summarize(std::vector<double> errors) {
  ErrorStats s;
  const double n = static_cast<double>(errors.size());
  for (const double e : errors) s.mean += e;
  s.mean /= n;
  double ss = 0.0;
  for (const double e : errors) ss += (e - s.mean) * (e - s.mean);
  s.std = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.per_sample = std::move(errors);
  return s;
}

/// Reconstruct every test column with the given estimator and sensors.
inline ErrorStats reconstruction_errors(const ModalBasis& basis, const SensorSelection& sel, EstimatorKind kind,
                                        const PriorCovariance& prior, const NoiseModel& noise,
                                        const SnapshotMatrix& test_clean, const SnapshotMatrix& test_noisy) {
  std::optional<Posterior> post;
  if (kind == EstimatorKind::kMap) post = build_posterior(basis, sel, prior, noise);
  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(test_clean.n_samples()));
  for (Index c = 0; c < test_clean.n_samples(); ++c) {
    const Vector y = sel.entries_of(test_noisy.data.col(c));
    const Estimate est =
        kind == EstimatorKind::kMap ? map_estimate(*post, basis, sel, y) : deim_estimate(basis, sel, y);
    errors.push_back(relative_error(est, test_clean.data.col(c)));
  }
  return summarize(std::move(errors));
}

struct SweepRow {
  SweepMethod method = SweepMethod::kQdeim;
  Index n = 0;
  Index k = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double mean_rel_error = 0.0;
  double std_rel_error = 0.0;
  std::optional<RiskReport> risk;
  std::optional<double> dice_vs_greedy;
  std::vector<Index> sensors;
};

struct MethodPlan {
  SweepMethod method;
  Index n;
  Index k;
  std::uint64_t seed;
};

inline void validate(const ExperimentConfig& cfg, Index n_dims) {
  detail::require(!cfg.mode_range.empty(), "experiment: mode_range is empty");
  detail::require(!cfg.sensor_range.empty(), "experiment: sensor_range is empty");
  detail::require(!cfg.methods.empty(), "experiment: no methods selected");
  detail::require(!cfg.seeds.empty(), "experiment: no seeds");
  cfg.noise.validate();
  for (const Index n : cfg.mode_range) detail::require(n >= 1, "experiment: mode counts must be >= 1");
  for (const Index k : cfg.sensor_range) {
    detail::require(k >= 1 && k <= n_dims, "experiment: sensor count " + std::to_string(k) + " outside [1, N]");
  }
  const bool bayesian = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                    [](SweepMethod m) { return m != SweepMethod::kQdeim; });
  detail::require(!bayesian || cfg.noise.sigma > 0.0, "experiment: MAP methods need sigma > 0");
  if (std::find(cfg.methods.begin(), cfg.methods.end(), SweepMethod::kDMap) != cfg.methods.end()) {
    for (const Index k : cfg.sensor_range) {
      const std::uint64_t c = binomial(n_dims, k);
      if (c > cfg.brute_budget) {
        throw InputError("experiment: d_map needs C(" + std::to_string(n_dims) + "," + std::to_string(k) +
                         ") = " + std::to_string(c) + " evaluations, brute_budget is " +
                         std::to_string(cfg.brute_budget));
      }
    }
  }
}

/// Error sweep over (method, n, k, seed). Rows are ordered by method in
/// config order, then by (n, k, seed).
inline std::vector<SweepRow> run_error_sweep(const ExperimentConfig& cfg) {
  const Index n_dims = dataset_dims(cfg.dataset);
  validate(cfg, n_dims);

  const bool has_qdeim = std::find(cfg.methods.begin(), cfg.methods.end(), SweepMethod::kQdeim) != cfg.methods.end();
  Index max_modes = *std::max_element(cfg.mode_range.begin(), cfg.mode_range.end());
  if (has_qdeim) {
    max_modes = std::max(max_modes, *std::max_element(cfg.sensor_range.begin(), cfg.sensor_range.end()));
  }
  std::map<std::uint64_t, PreparedData> data;
  for (const auto seed : cfg.seeds) data.emplace(seed, prepare_data(cfg.dataset, cfg.noise, seed, max_modes));

  std::vector<Index> modes = cfg.mode_range;
  std::vector<Index> sensors = cfg.sensor_range;
  std::sort(modes.begin(), modes.end());
  std::sort(sensors.begin(), sensors.end());
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());

  std::vector<MethodPlan> plan;
  for (const auto m : cfg.methods) {
    const bool follow = m == SweepMethod::kQdeim && cfg.qdeim_modes_follow_k;
    for (const auto n : modes) {
      for (const auto k : sensors) {
        // With n tied to k, one row per k suffices.
        if (follow && n != modes.front()) continue;
        for (const auto seed : seeds) plan.push_back({m, follow ? k : n, k, seed});
      }
    }
  }
  std::stable_sort(plan.begin(), plan.end(), [&](const MethodPlan& a, const MethodPlan& b) {
    if (a.method != b.method) {
      return std::find(cfg.methods.begin(), cfg.methods.end(), a.method) <
             std::find(cfg.methods.begin(), cfg.methods.end(), b.method);
    }
    return std::tie(a.n, a.k, a.seed) < std::tie(b.n, b.k, b.seed);
  });

  std::vector<SweepRow> rows(plan.size());
  parallel_for(plan.size(), cfg.jobs, [&](std::size_t i) {
    const MethodPlan& p = plan[i];
    const PreparedData& d = data.at(p.seed);
    const Index n_eff = p.n;
    const ModalBasis basis = d.full_basis.truncated(n_eff);
    const PriorCovariance prior = prior_from_pod(basis);

    PlacementResult placed;
    EstimatorKind kind = EstimatorKind::kMap;
    switch (p.method) {
      case SweepMethod::kQdeim:
        placed = place_cpqr(basis, p.k);
        kind = EstimatorKind::kDeim;
        break;
      case SweepMethod::kQmap:
        placed = place_qmap(basis, prior, cfg.noise, p.k);
        break;
      case SweepMethod::kGreedyDMap:
        placed = place_greedy_d(basis, prior, cfg.noise, p.k);
        break;
      case SweepMethod::kDMap:
        placed = place_brute_d(basis, prior, cfg.noise, p.k, cfg.brute_budget);
        break;
    }
    const ErrorStats stats =
        reconstruction_errors(basis, placed.selection, kind, prior, cfg.noise, d.test_clean, d.test_noisy);

    SweepRow row;
    row.method = p.method;
    row.n = n_eff;
    row.k = p.k;
    row.sigma = cfg.noise.sigma;
    row.seed = p.seed;
    row.mean_rel_error = stats.mean;
    row.std_rel_error = stats.std;
    row.sensors = placed.selection.indices();
    if (cfg.noise.sigma > 0.0) {
      row.risk = risk_report(basis, placed.selection, prior, cfg.noise);
      const auto greedy = p.method == SweepMethod::kGreedyDMap ? placed : place_greedy_d(basis, prior, cfg.noise, p.k);
      row.dice_vs_greedy = dice(placed.selection, greedy.selection);
    }
    rows[i] = std::move(row);
  });
  return rows;
}

struct RiskSweepRow {
  Index n = 0;
  Index k = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  RiskReport report;
  double sigma_min = 0.0;  // smallest nonzero singular value of S^T Phi
  double null_space_mass = 0.0;
};

/// k distinct locations drawn uniformly (partial Fisher-Yates), sorted.
inline SensorSelection random_selection(Index n_locations, Index k, std::uint64_t seed) {
  detail::require(k >= 0 && k <= n_locations, "random_selection: k must lie in [0, N]");
  Stream rng(seed, streams::kSensors);
  std::vector<Index> pool(static_cast<std::size_t>(n_locations));
  for (Index i = 0; i < n_locations; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_locations - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> chosen(pool.begin(), pool.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  return SensorSelection(std::move(chosen), n_locations);
}

/// Fix one random k-subset and sweep the number of modes.
inline std::vector<RiskSweepRow> run_risk_sweep(const DatasetSpec& dataset, const NoiseModel& noise, Index k,
                                                const std::vector<Index>& mode_range, std::uint64_t seed) {
  detail::require(!mode_range.empty(), "risk sweep: mode_range is empty");
  detail::require(noise.sigma > 0.0, "risk sweep: sigma must be positive");
  const Index max_modes = *std::max_element(mode_range.begin(), mode_range.end());
  const PreparedData d = prepare_data(dataset, noise, seed, max_modes);
  const Index N = d.full_basis.n_dims();
  detail::require(k >= 1 && k <= N, "risk sweep: k outside [1, N]");
  const SensorSelection sel = random_selection(N, k, seed);

  std::vector<Index> modes = mode_range;
  std::sort(modes.begin(), modes.end());
  std::vector<RiskSweepRow> rows;
  for (const Index n : modes) {
    const ModalBasis basis = d.full_basis.truncated(n);
    const PriorCovariance prior = prior_from_pod(basis);
    const Matrix a = sel.rows_of(basis.phi);
    RiskSweepRow row;
    row.n = n;
    row.k = k;
    row.sigma = noise.sigma;
    row.seed = seed;
    row.report = risk_report(a, prior, noise);
    const RangeSplit rs = range_split(a);
    row.sigma_min = rs.rank > 0 ? rs.singular_values(rs.rank - 1) : 0.0;
    row.null_space_mass = null_space_prior_mass(a, prior);
    rows.push_back(row);
  }
  return rows;
}

struct DiceCell {
  Index n = 0;
  double sigma = 0.0;
  double dice = 0.0;
  bool excluded = false;  // n < k: CPQR cannot rank the surplus sensors
  std::vector<Index> qmap_sensors;
  std::vector<Index> greedy_sensors;
};

/// Dice(Q-MAP, greedy D-optimal) over (n, sigma) with k fixed. The noise
/// level only enters the placement problems.
inline std::vector<DiceCell> run_dice_grid(const DatasetSpec& dataset, Index k, const std::vector<Index>& mode_range,
                                           const std::vector<double>& sigma_range, std::uint64_t seed,
                                           unsigned jobs = 1) {
  detail::require(!mode_range.empty() && !sigma_range.empty(), "dice grid: empty range");
  const Index max_modes = *std::max_element(mode_range.begin(), mode_range.end());
  const PreparedData d = prepare_data(dataset, NoiseModel{0.0}, seed, max_modes);
  std::vector<Index> modes = mode_range;
  std::sort(modes.begin(), modes.end());
  std::vector<double> sigmas = sigma_range;
  std::sort(sigmas.begin(), sigmas.end());
  std::vector<DiceCell> cells(modes.size() * sigmas.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Index n = modes[i / sigmas.size()];
    const NoiseModel noise{sigmas[i % sigmas.size()]};
    const ModalBasis basis = d.full_basis.truncated(n);
    const PriorCovariance prior = prior_from_pod(basis);
    const auto q = place_qmap(basis, prior, noise, k);
    const auto g = place_greedy_d(basis, prior, noise, k);
    cells[i] = DiceCell{n, noise.sigma, dice(q.selection, g.selection), n < k, q.selection.indices(),
                        g.selection.indices()};
  });
  return cells;
}

/// A rectangular string table with named columns.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InputError("table has no column '" + name + "'");
    return static_cast<Index>(it - columns.begin());
  }

  std::string to_csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }
};

namespace detail {

inline std::string num(double v) {
  if (!std::isfinite(v)) return "";
  return format_double(v);
}

inline std::string join_indices(const std::vector<Index>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? " " : "") + std::to_string(idx[i]);
  return s;
}

inline void append_risk(std::vector<std::string>& r, const std::optional<RiskReport>& rep) {
  if (!rep) {
    r.insert(r.end(), 8, "");
    return;
  }
  r.push_back(num(rep->risk_ls));
  r.push_back(num(rep->risk_map));
  r.push_back(num(rep->delta_prior));
  r.push_back(num(rep->delta_noise));
  r.push_back(num(rep->zeta_prior));
  r.push_back(num(rep->zeta_noise));
  r.push_back(num(rep->premium));
  r.push_back(std::to_string(rep->nullity));
}

inline const std::vector<std::string> kRiskColumns = {"risk_ls",    "risk_map",   "delta_prior", "delta_noise",
                                                      "zeta_prior", "zeta_noise", "premium",     "nullity"};

}  // namespace detail

inline Table to_table(const std::vector<SweepRow>& rows) {
  Table t;
  t.columns = {"method", "n", "k", "sigma", "seed", "mean_rel_error", "std_rel_error"};
  t.columns.insert(t.columns.end(), detail::kRiskColumns.begin(), detail::kRiskColumns.end());
  t.columns.push_back("dice_vs_greedy");
  t.columns.push_back("sensors");
  for (const auto& row : rows) {
    std::vector<std::string> r{to_string(row.method),       std::to_string(row.n),
                               std::to_string(row.k),       detail::num(row.sigma),
                               std::to_string(row.seed),    detail::num(row.mean_rel_error),
                               detail::num(row.std_rel_error)};
    detail::append_risk(r, row.risk);
    r.push_back(row.dice_vs_greedy ? detail::num(*row.dice_vs_greedy) : "");
    r.push_back(detail::join_indices(row.sensors));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Table to_table(const std::vector<RiskSweepRow>& rows) {
  Table t;
  t.columns = {"n", "k", "sigma", "seed"};
  t.columns.insert(t.columns.end(), detail::kRiskColumns.begin(), detail::kRiskColumns.end());
  t.columns.push_back("sigma_min");
  t.columns.push_back("null_space_prior_mass");
  for (const auto& row : rows) {
    std::vector<std::string> r{std::to_string(row.n), std::to_string(row.k), detail::num(row.sigma),
                               std::to_string(row.seed)};
    detail::append_risk(r, row.report);
    r.push_back(detail::num(row.sigma_min));
    r.push_back(detail::num(row.null_space_mass));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Table to_table(const std::vector<DiceCell>& cells) {
  Table t;
  t.columns = {"n", "sigma", "dice", "excluded", "qmap_sensors", "greedy_sensors"};
  for (const auto& c : cells) {
    t.rows.push_back({std::to_string(c.n), detail::num(c.sigma), detail::num(c.dice), c.excluded ? "1" : "0",
                      detail::join_indices(c.qmap_sensors), detail::join_indices(c.greedy_sensors)});
  }
  return t;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fixed(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

inline double parse_cell(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

/// Static SVG line chart, one polyline per distinct value of `group_col`.
/// When `err_col` is non-empty, vertical error bars of +/- that column are
/// drawn. Points are sorted by x; output bytes depend only on the table.
inline std::string render_svg_lines(const Table& table, const std::string& x_col, const std::string& y_col,
                                    const std::string& group_col, const std::string& err_col = "") {
  const Index xi = table.column(x_col);
  const Index yi = table.column(y_col);
  const Index gi = table.column(group_col);
  const Index ei = err_col.empty() ? -1 : table.column(err_col);
  detail::require(!table.rows.empty(), "svg: table has no rows");

  struct Point {
    double x, y, e;
  };
  std::map<std::string, std::vector<Point>> groups;
  for (const auto& r : table.rows) {
    auto& pts = groups[r[static_cast<std::size_t>(gi)]];
    const double x = detail::parse_cell(r[static_cast<std::size_t>(xi)]);
    const double y = detail::parse_cell(r[static_cast<std::size_t>(yi)]);
    const double e = ei >= 0 ? detail::parse_cell(r[static_cast<std::size_t>(ei)]) : 0.0;
    if (std::isfinite(x) && std::isfinite(y)) pts.push_back({x, y, std::isfinite(e) ? e : 0.0});
  }
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (auto& [name, pts] : groups) {
    if (pts.empty()) throw InputError("svg: group '" + name + "' has no plottable points");
    std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y - p.e);
      ymax = std::max(ymax, p.y + p.e);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  constexpr double kW = 640, kH = 400, kL = 60, kR = 140, kT = 20, kB = 50;
  auto sx = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
  auto sy = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
     << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(x_col) << "</text>\n"
     << "<text x=\"15\" y=\"" << (kT + kH - kB) / 2 << "\" transform=\"rotate(-90 15 " << (kT + kH - kB) / 2
     << ")\" text-anchor=\"middle\">" << detail::xml_escape(y_col) << "</text>\n"
     << "<text x=\"" << kL << "\" y=\"" << kH - kB + 15 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(detail::num(xmin)) << "</text>\n"
     << "<text x=\"" << kW - kR << "\" y=\"" << kH - kB + 15 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(detail::num(xmax)) << "</text>\n"
     << "<text x=\"" << kL - 5 << "\" y=\"" << kH - kB << "\" text-anchor=\"end\">"
     << detail::xml_escape(detail::num(ymin)) << "</text>\n"
     << "<text x=\"" << kL - 5 << "\" y=\"" << kT + 5 << "\" text-anchor=\"end\">"
     << detail::xml_escape(detail::num(ymax)) << "</text>\n";
  std::size_t g = 0;
  for (const auto& [name, pts] : groups) {
    const char* color = kColors[g % (sizeof kColors / sizeof *kColors)];
    os << "<g stroke=\"" << color << "\" fill=\"none\">\n<polyline points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << detail::fixed(sx(pts[i].x)) << ',' << detail::fixed(sy(pts[i].y));
    }
    os << "\"/>\n";
    if (ei >= 0) {
      for (const auto& p : pts) {
        os << "<line x1=\"" << detail::fixed(sx(p.x)) << "\" y1=\"" << detail::fixed(sy(p.y - p.e)) << "\" x2=\""
           << detail::fixed(sx(p.x)) << "\" y2=\"" << detail::fixed(sy(p.y + p.e)) << "\"/>\n";
      }
    }
    os << "</g>\n<text x=\"" << kW - kR + 10 << "\" y=\"" << kT + 15 + 18 * static_cast<double>(g)
       << "\" fill=\"" << color << "\">" << detail::xml_escape(name) << "</text>\n";
    ++g;
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline void render_svg_lines(const Table& table, const std::string& x_col, const std::string& y_col,
                             const std::string& group_col, const std::string& path, const std::string& err_col) {
  write_text(path, render_svg_lines(table, x_col, y_col, group_col, err_col));
}

/// Conventions applied by the sweeps, echoed into run metadata.
inline nlohmann::json sweep_conventions() {
  return {
      {"mean_handling", "estimators use y - S^T mean_train; mean_train is added back to reconstructions"},
      {"error_reference", "relative errors against the noiseless test sample; measurements are noisy"},
      {"bound_reference", "a-priori error bounds evaluated on centered states"},
      {"noise_split", "iid noise added to the test split only"},
      {"monte_carlo", "antithetic pairs (m, eta) and (-m, eta)"},
      {"surplus_sensors", "for k > n, CPQR-based placements order the extra sensors by index"},
  };
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (const auto* h = std::get_if<HarmonicConfig>(&cfg.dataset)) {
    j["dataset"] = {{"kind", "harmonic"},
                    {"n_grid", h->n_grid},
                    {"n_terms", h->n_terms},
                    {"n_samples", h->n_samples},
                    {"train_fraction", h->train_fraction},
                    {"amplitude_param", h->amplitude_param == AmplitudeParam::kStd ? "std" : "variance"}};
  } else {
    const auto& f = std::get<FileDataset>(cfg.dataset);
    j["dataset"] = {{"kind", "file"}, {"path", f.path}, {"train_fraction", f.train_fraction}};
  }
  j["sigma"] = cfg.noise.sigma;
  j["mode_range"] = cfg.mode_range;
  j["sensor_range"] = cfg.sensor_range;
  std::vector<std::string> methods;
  for (const auto m : cfg.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["seeds"] = cfg.seeds;
  j["brute_budget"] = cfg.brute_budget;
  j["qdeim_modes_follow_k"] = cfg.qdeim_modes_follow_k;
  return j;
}

}  // namespace modalest
