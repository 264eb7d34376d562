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
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

#include "modalest/experiments.hpp"
#include "temp_dir.hpp"

namespace {

using modalest::ExperimentConfig;
using modalest::Index;
using modalest::Matrix;
using modalest::SweepMethod;
using modalest::SweepRow;
using modalest::Vector;

std::vector<Index> range(Index lo, Index hi) {
  std::vector<Index> v(static_cast<std::size_t>(hi - lo + 1));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

/// Mean of mean_rel_error over seeds, keyed by (method, n, k).
std::map<std::tuple<SweepMethod, Index, Index>, double> seed_average(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<SweepMethod, Index, Index>, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    auto& a = acc[{r.method, r.n, r.k}];
    a.first += r.mean_rel_error;
    a.second += 1;
  }
  std::map<std::tuple<SweepMethod, Index, Index>, double> out;
  for (const auto& [key, a] : acc) out[key] = a.first / a.second;
  return out;
}

/// Minimal XML well-formedness check: balanced, properly nested tags,
/// quoted attributes, and no stray '<' or '&' in text.
bool well_formed_xml(const std::string& doc, std::string* why) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool seen_root = false;
  const std::regex attrs(R"((\s+[A-Za-z_:][-A-Za-z0-9_:.]*="[^"<]*")*\s*)");
  while (i < doc.size()) {
    if (doc[i] != '<') {
      if (doc[i] == '&') {
        const auto semi = doc.find(';', i);
        const std::string ent = doc.substr(i, semi == std::string::npos ? 0 : semi - i + 1);
        if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;") {
          *why = "bad entity at " + std::to_string(i);
          return false;
        }
      } else if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i]))) {
        *why = "text outside root at " + std::to_string(i);
        return false;
      }
      ++i;
      continue;
    }
    const auto close = doc.find('>', i);
    if (close == std::string::npos) {
      *why = "unterminated tag";
      return false;
    }
    std::string tag = doc.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.starts_with("?")) continue;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) {
        *why = "mismatched </" + tag.substr(1) + ">";
        return false;
      }
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.ends_with("/");
    if (self_closing) tag.pop_back();
    const auto name_end = tag.find_first_of(" \t\n");
    const std::string name = tag.substr(0, name_end);
    const std::string rest = name_end == std::string::npos ? "" : tag.substr(name_end);
    if (!std::regex_match(rest, attrs)) {
      *why = "bad attributes in <" + name + ">";
      return false;
    }
    if (stack.empty()) {
      if (seen_root) {
        *why = "multiple roots";
        return false;
      }
      seen_root = true;
    }
    if (!self_closing) stack.push_back(name);
  }
  if (!stack.empty()) {
    *why = "unclosed <" + stack.back() + ">";
    return false;
  }
  return seen_root;
}

TEST(XmlChecker, SanityOfTheChecker) {
  std::string why;
  EXPECT_TRUE(well_formed_xml("<a x=\"1\"><b/>t &amp; u</a>", &why)) << why;
  EXPECT_FALSE(well_formed_xml("<a><b></a></b>", &why));
  EXPECT_FALSE(well_formed_xml("<a>x & y</a>", &why));
  EXPECT_FALSE(well_formed_xml("<a x=1></a>", &why));
}

TEST(ErrorSweep, DeterministicAcrossRunsAndJobs) {
  ExperimentConfig cfg;
  cfg.mode_range = {5, 10, 20};
  cfg.sensor_range = {3, 5};
  cfg.methods = {SweepMethod::kQdeim, SweepMethod::kQmap, SweepMethod::kGreedyDMap};
  cfg.seeds = {0, 1};
  const auto a = modalest::to_table(modalest::run_error_sweep(cfg)).to_csv();
  const auto b = modalest::to_table(modalest::run_error_sweep(cfg)).to_csv();
  cfg.jobs = 3;
  const auto c = modalest::to_table(modalest::run_error_sweep(cfg)).to_csv();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(ErrorSweep, RowLayout) {
  ExperimentConfig cfg;
  cfg.mode_range = {10, 20};
  cfg.sensor_range = {4, 5};
  cfg.methods = {SweepMethod::kGreedyDMap, SweepMethod::kQdeim};
  cfg.seeds = {3, 1};
  const auto rows = modalest::run_error_sweep(cfg);
  // greedy: 2 n x 2 k x 2 seeds; qdeim with n tied to k: 2 k x 2 seeds.
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows.front().method, SweepMethod::kGreedyDMap);
  EXPECT_EQ(rows.front().seed, 1u);
  EXPECT_EQ(rows.back().method, SweepMethod::kQdeim);
  for (const auto& r : rows) {
    EXPECT_GE(r.mean_rel_error, 0.0);
    EXPECT_GE(r.std_rel_error, 0.0);
    EXPECT_EQ(static_cast<Index>(r.sensors.size()), r.k);
    ASSERT_TRUE(r.risk.has_value());
    ASSERT_TRUE(r.dice_vs_greedy.has_value());
    if (r.method == SweepMethod::kQdeim) {
      EXPECT_EQ(r.n, r.k);
    }
    if (r.method == SweepMethod::kGreedyDMap) {
      EXPECT_EQ(*r.dice_vs_greedy, 1.0);
    }
  }
  const auto t = modalest::to_table(rows);
  EXPECT_EQ(t.rows.size(), rows.size());
  for (const auto& r : t.rows) EXPECT_EQ(r.size(), t.columns.size());
  EXPECT_EQ(t.columns.front(), "method");
}

TEST(ErrorSweep, ValidationHappensBeforeWork) {
  ExperimentConfig cfg;
  cfg.methods = {SweepMethod::kDMap};
  cfg.sensor_range = {5};
  cfg.brute_budget = 1000;
  try {
    modalest::run_error_sweep(cfg);
    FAIL() << "expected InputError";
  } catch (const modalest::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("658008"), std::string::npos) << e.what();
  }
  cfg = {};
  cfg.mode_range.clear();
  EXPECT_THROW(modalest::run_error_sweep(cfg), modalest::InputError);
  cfg = {};
  cfg.sensor_range = {41};
  EXPECT_THROW(modalest::run_error_sweep(cfg), modalest::InputError);
  cfg = {};
  cfg.noise.sigma = 0.0;
  EXPECT_THROW(modalest::run_error_sweep(cfg), modalest::InputError);
}

TEST(ErrorSweep, NoiselessDeimRecoversStatesInsideTheBasis) {
  const auto d = modalest::prepare_data(modalest::HarmonicConfig{}, {0.0}, 0, 5);
  const auto& basis = d.full_basis;
  const auto sel = modalest::place_cpqr(basis, 5).selection;
  // Test states that lie exactly in mean + span(Phi).
  const Matrix coeffs = basis.phi.transpose() * (d.test_clean.data.colwise() - basis.mean);
  modalest::SnapshotMatrix inside{(basis.phi * coeffs).colwise() + basis.mean, std::nullopt};
  const auto stats = modalest::reconstruction_errors(basis, sel, modalest::EstimatorKind::kDeim,
                                                     modalest::prior_from_pod(basis), {0.0}, inside, inside);
  EXPECT_LT(stats.mean, 1e-12);
  EXPECT_EQ(stats.per_sample.size(), 250u);
}

TEST(ErrorSweep, QdeimErrorMinimisedWhenModesEqualSensors) {
  ExperimentConfig cfg;
  cfg.methods = {SweepMethod::kQdeim};
  cfg.qdeim_modes_follow_k = false;
  cfg.sensor_range = {5};
  cfg.mode_range = range(1, 15);
  cfg.seeds = {0, 1, 2};
  const auto avg = seed_average(modalest::run_error_sweep(cfg));
  Index best = -1;
  double best_err = 1e300;
  for (const auto& [key, err] : avg) {
    if (err < best_err) {
      best_err = err;
      best = std::get<1>(key);
    }
  }
  EXPECT_EQ(best, 5);
}

TEST(ErrorSweep, GreedyMapNeverWorseThanQdeimAcrossModes) {
  ExperimentConfig cfg;
  cfg.methods = {SweepMethod::kQdeim, SweepMethod::kGreedyDMap};
  cfg.qdeim_modes_follow_k = false;
  cfg.sensor_range = {5};
  cfg.mode_range = range(1, 30);
  cfg.seeds = {0, 1, 2};
  const auto avg = seed_average(modalest::run_error_sweep(cfg));
  for (Index n : cfg.mode_range) {
    const double q = avg.at({SweepMethod::kQdeim, n, 5});
    const double g = avg.at({SweepMethod::kGreedyDMap, n, 5});
    EXPECT_LE(g, q + 0.01) << "n = " << n;
  }
}

TEST(ErrorSweep, GreedyMapNeverWorseThanQdeimAcrossSensors) {
  ExperimentConfig cfg;
  cfg.methods = {SweepMethod::kQdeim, SweepMethod::kGreedyDMap};
  cfg.sensor_range = range(1, 30);
  cfg.mode_range = {20};
  cfg.seeds = {0, 1, 2};
  const auto avg = seed_average(modalest::run_error_sweep(cfg));
  for (Index k : cfg.sensor_range) {
    const double q = avg.at({SweepMethod::kQdeim, k, k});
    const double g = avg.at({SweepMethod::kGreedyDMap, 20, k});
    EXPECT_LE(g, q + 0.01) << "k = " << k;
  }
}

TEST(ErrorSweep, MapErrorNonIncreasingInSensorCount) {
  ExperimentConfig cfg;
  cfg.methods = {SweepMethod::kGreedyDMap};
  cfg.mode_range = {20};
  cfg.sensor_range = range(1, 30);
  cfg.seeds = {0, 1, 2};
  const auto avg = seed_average(modalest::run_error_sweep(cfg));
  double prev = 1e300;
  for (const auto& [key, err] : avg) {
    EXPECT_LE(err, prev + 0.01) << "k = " << std::get<2>(key);
    prev = err;
  }
}

TEST(RiskSweep, SpikeAndZeroPriorTerm) {
  const auto rows = modalest::run_risk_sweep(modalest::HarmonicConfig{}, {0.1}, 5, range(1, 30), 0);
  ASSERT_EQ(rows.size(), 30u);
  std::vector<double> tail;
  for (const auto& r : rows) {
    if (r.n <= 5) {
      EXPECT_EQ(r.report.delta_prior, 0.0) << "n = " << r.n;
    }
    if (r.n >= 8) tail.push_back(r.report.delta_noise);
    EXPECT_LE(r.report.delta_noise, r.report.zeta_noise + 1e-9 * r.report.scale());
    EXPECT_EQ(r.report.nullity, std::max<Index>(0, r.n - 5));
  }
  std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
  const double median = tail.size() % 2 ? tail[tail.size() / 2]
                                        : 0.5 * (tail[tail.size() / 2] +
                                                 *std::max_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2)));
  EXPECT_GT(rows[4].report.delta_noise, 10.0 * median);
  const auto t = modalest::to_table(rows);
  EXPECT_NE(std::find(t.columns.begin(), t.columns.end(), "sigma_min"), t.columns.end());
}

TEST(RiskSweep, RandomSelectionIsSeededAndUniformish) {
  EXPECT_EQ(modalest::random_selection(40, 5, 3), modalest::random_selection(40, 5, 3));
  std::vector<int> hits(40, 0);
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const auto sel = modalest::random_selection(40, 5, s);
    for (Index i : sel.indices()) ++hits[static_cast<std::size_t>(i)];
  }
  for (int h : hits) EXPECT_NEAR(h, 500, 100);
}

TEST(DiceGrid, SmallNoiseAgreementAndExclusions) {
  const auto cells = modalest::run_dice_grid(modalest::HarmonicConfig{}, 5, {2, 4, 5, 10, 20, 30}, {1e-4, 1e-1}, 0, 2);
  ASSERT_EQ(cells.size(), 12u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.excluded, c.n < 5);
    if (!c.excluded && c.sigma == 1e-4) {
      EXPECT_EQ(c.dice, 1.0) << "n = " << c.n;
    }
    EXPECT_GE(c.dice, 0.0);
    EXPECT_LE(c.dice, 1.0);
  }
  const auto t = modalest::to_table(cells);
  EXPECT_EQ(t.columns.size(), 6u);
  EXPECT_EQ(t.rows.size(), 12u);
}

TEST(Svg, OnePolylinePerGroup) {
  modalest::Table t;
  t.columns = {"x", "y", "g", "e"};
  t.rows = {{"1", "2", "a", "0.1"}, {"2", "3", "a", "0.1"}, {"1", "1", "b", "0.2"}, {"2", "0.5", "b", "0.2"}};
  const std::string svg = modalest::render_svg_lines(t, "x", "y", "g");
  std::size_t count = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  EXPECT_EQ(count, 2u);
  std::string why;
  EXPECT_TRUE(well_formed_xml(svg, &why)) << why;
  EXPECT_EQ(svg, modalest::render_svg_lines(t, "x", "y", "g"));

  const std::string with_err = modalest::render_svg_lines(t, "x", "y", "g", "e");
  EXPECT_GT(with_err.size(), svg.size());
  EXPECT_TRUE(well_formed_xml(with_err, &why)) << why;
}

TEST(Svg, Errors) {
  modalest::Table t;
  t.columns = {"x", "y", "g"};
  EXPECT_THROW(modalest::render_svg_lines(t, "x", "y", "g"), modalest::InputError);
  t.rows = {{"1", "2", "a"}, {"", "", "b"}};
  EXPECT_THROW(modalest::render_svg_lines(t, "x", "y", "g"), modalest::InputError);
  t.rows = {{"1", "2", "a"}};
  EXPECT_THROW(modalest::render_svg_lines(t, "x", "nope", "g"), modalest::InputError);
}

TEST(Svg, SweepOutputIsWellFormedFile) {
  ExperimentConfig cfg;
  cfg.mode_range = {5, 10, 20};
  cfg.methods = {SweepMethod::kGreedyDMap, SweepMethod::kQmap};
  cfg.qdeim_modes_follow_k = false;
  const auto t = modalest::to_table(modalest::run_error_sweep(cfg));
  test_support::TempDir dir;
  const auto path = dir.file("sweep.svg");
  modalest::render_svg_lines(t, "n", "mean_rel_error", "method", path, "std_rel_error");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string why;
  EXPECT_TRUE(well_formed_xml(ss.str(), &why)) << why;
}

TEST(Metadata, ConfigEcho) {
  ExperimentConfig cfg;
  cfg.seeds = {4, 5};
  const auto j = modalest::to_json(cfg);
  EXPECT_EQ(j["dataset"]["kind"], "harmonic");
  EXPECT_EQ(j["dataset"]["amplitude_param"], "std");
  EXPECT_EQ(j["seeds"].size(), 2u);
  EXPECT_EQ(j["methods"][0], "qdeim");
  EXPECT_TRUE(modalest::sweep_conventions().contains("mean_handling"));
}

TEST(Methods, ParseNames) {
  for (auto m : {SweepMethod::kQdeim, SweepMethod::kQmap, SweepMethod::kGreedyDMap, SweepMethod::kDMap}) {
    EXPECT_EQ(modalest::parse_sweep_method(modalest::to_string(m)), m);
  }
  EXPECT_FALSE(modalest::parse_sweep_method("nope").has_value());
}

TEST(FileDataset, IngestsSavedSnapshots) {
  test_support::TempDir dir;
  const auto path = dir.file("data.bin");
  modalest::save_snapshots(modalest::generate_harmonic(modalest::HarmonicConfig{}), path,
                           modalest::FileFormat::kBinary);
  ExperimentConfig from_file;
  from_file.dataset = modalest::FileDataset{path, 0.75};
  from_file.methods = {SweepMethod::kGreedyDMap};
  ExperimentConfig generated = from_file;
  generated.dataset = modalest::HarmonicConfig{};
  EXPECT_EQ(modalest::to_table(modalest::run_error_sweep(from_file)).to_csv(),
            modalest::to_table(modalest::run_error_sweep(generated)).to_csv());
}

}  // namespace
