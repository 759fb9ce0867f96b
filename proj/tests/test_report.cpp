// Copyright 2026 The Edge2Prompt Authors
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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "e2p/ablation.hpp"
#include "e2p/report.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("e2p_report_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

e2p::MetricReport make_report(const std::string& protocol, e2p::Scope scope,
                              std::vector<double> dices) {
  e2p::MetricReport r;
  r.protocol = protocol;
  r.scope = scope;
  int i = 0;
  for (double d : dices) {
    e2p::MetricEntry e;
    e.volume_id = "v" + std::to_string(i++);
    e.modality = e2p::Modality::kCT;
    e.dice = d;
    e.iou = d / (2.0 - d);
    r.per_volume.push_back(e);
  }
  r.summary = e2p::summarize(r.per_volume);
  return r;
}

e2p::AblationReport make_loss_ablation() {
  e2p::AblationReport rep;
  rep.axis = e2p::AblationAxis::kLossTerms;
  rep.protocol = "CROSS_MR_TO_CT";
  rep.scope = "OOD";
  const char* labels[] = {"F", "D", "LCD", "F+D", "F+LCD", "D+LCD", "F+D+LCD"};
  double d = 0.70;
  for (const char* label : labels) {
    e2p::AblationRow row;
    row.label = label;
    row.ok = true;
    row.dice_mean = d;
    row.dice_std = 0.1;
    row.iou_mean = d / (2.0 - d);
    row.iou_std = 0.08;
    row.epochs_run = 3;
    row.seconds = 1.5;
    d += 0.02;
    rep.rows.push_back(row);
  }
  return rep;
}

e2p::AblationReport make_edge_ablation(double lap, double sobel, double canny) {
  e2p::AblationReport rep;
  rep.axis = e2p::AblationAxis::kEdgeDetector;
  rep.protocol = "CROSS_MR_TO_CT";
  rep.scope = "OOD";
  const char* labels[] = {"laplacian", "sobel", "canny"};
  const double means[] = {lap, sobel, canny};
  for (int i = 0; i < 3; ++i) {
    e2p::AblationRow row;
    row.label = labels[i];
    row.ok = true;
    row.dice_mean = means[i];
    row.dice_std = 0.2;
    row.iou_mean = means[i] / (2.0 - means[i]);
    row.iou_std = 0.15;
    row.epochs_run = 3;
    row.seconds = 1.0;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace

TEST_CASE("metrics csv round trips per-volume rows") {
  const fs::path dir = temp_dir("csv");
  const fs::path file = dir / "metrics.csv";

  e2p::MetricReport report =
      make_report("CROSS_CT_TO_MR", e2p::Scope::kOod, {0.8, 0.9, 0.85});
  e2p::write_metrics_csv(file, report, e2p::PipelineKind::kEdge2Prompt);

  e2p::RunMetrics run = e2p::read_metrics_csv(file);
  CHECK(run.protocol == "CROSS_CT_TO_MR");
  CHECK(run.scope == e2p::Scope::kOod);
  CHECK(run.pipeline == e2p::PipelineKind::kEdge2Prompt);
  REQUIRE(run.per_volume.size() == 3);
  CHECK(run.per_volume[1].dice == 0.9);
  CHECK(run.summary.dice_mean ==
        doctest::Approx(report.summary.dice_mean).epsilon(1e-12));

  std::ofstream os(dir / "other.csv");
  os << "foo,bar\n1,2\n";
  os.close();
  CHECK_THROWS_WITH_AS(e2p::read_metrics_csv(dir / "other.csv"),
                       doctest::Contains("not a metrics csv"),
                       e2p::IngestionError);
  fs::remove_all(dir);
}

TEST_CASE("ablation csv round trips rows including failures") {
  const fs::path dir = temp_dir("abl_csv");
  const fs::path file = dir / "ablation.csv";

  e2p::AblationReport rep = make_loss_ablation();
  rep.rows[2].ok = false;
  rep.rows[2].error = "diverged, at step 7";  // comma must survive
  e2p::write_ablation_csv(file, rep);

  e2p::AblationReport back = e2p::read_ablation_csv(file);
  CHECK(back.axis == rep.axis);
  CHECK(back.protocol == rep.protocol);
  CHECK(back.scope == rep.scope);
  REQUIRE(back.rows.size() == 7);
  CHECK(back.rows[0].label == "F");
  CHECK(back.rows[6].label == "F+D+LCD");
  CHECK(back.rows[1].dice_mean == doctest::Approx(0.72).epsilon(1e-9));
  CHECK(!back.rows[2].ok);
  CHECK(back.rows[2].error.find("diverged") != std::string::npos);
  CHECK(back.rows[3].epochs_run == 3);
  fs::remove_all(dir);
}

TEST_CASE("display names match the table rows") {
  CHECK(e2p::display_name(e2p::PipelineKind::kImUnet) == "imU-Net");
  CHECK(e2p::display_name(e2p::PipelineKind::kEmUnet) == "emU-Net");
  CHECK(e2p::display_name(e2p::PipelineKind::kSUnet) == "sU-Net");
  CHECK(e2p::display_name(e2p::PipelineKind::kEdge2Prompt) == "Ours");
}

TEST_CASE("loss grid has seven variants that zero exactly the right weights") {
  e2p::ExperimentConfig base;
  base.data.synthetic = true;
  base.loss.w_f = 2.0;
  base.loss.w_d = 2.0;
  base.loss.w_lcd = 3.0;

  auto grid = e2p::ablation_grid(e2p::AblationAxis::kLossTerms, base);
  REQUIRE(grid.size() == 7);
  const char* expect[] = {"F", "D", "LCD", "F+D", "F+LCD", "D+LCD", "F+D+LCD"};
  for (int i = 0; i < 7; ++i) CHECK(grid[i].label == expect[i]);

  CHECK(grid[0].config.loss.w_f == 2.0);
  CHECK(grid[0].config.loss.w_d == 0.0);
  CHECK(grid[0].config.loss.w_lcd == 0.0);

  CHECK(grid[5].config.loss.w_f == 0.0);
  CHECK(grid[5].config.loss.w_d == 2.0);
  CHECK(grid[5].config.loss.w_lcd == 3.0);

  // The full variant is the base configuration itself.
  CHECK(grid[6].config.loss.w_f == base.loss.w_f);
  CHECK(grid[6].config.loss.w_d == base.loss.w_d);
  CHECK(grid[6].config.loss.w_lcd == base.loss.w_lcd);
  CHECK(grid[6].config.to_json() == base.to_json());

  // Only the loss weights vary across the grid.
  for (const auto& v : grid) {
    CHECK(v.config.edm.detector == base.edm.detector);
    CHECK(v.config.train.epochs == base.train.epochs);
  }
}

TEST_CASE("edge grid swaps only the detector") {
  e2p::ExperimentConfig base;
  base.data.synthetic = true;
  base.edm.detector = e2p::Detector::kCanny;

  auto grid = e2p::ablation_grid(e2p::AblationAxis::kEdgeDetector, base);
  REQUIRE(grid.size() == 3);
  CHECK(grid[0].label == "laplacian");
  CHECK(grid[1].label == "sobel");
  CHECK(grid[2].label == "canny");
  CHECK(grid[0].config.loss.w_f == base.loss.w_f);
  CHECK(grid[2].config.to_json() == base.to_json());
  CHECK(grid[0].config.edm.detector == e2p::Detector::kLaplacian);
  CHECK(grid[1].config.edm.detector == e2p::Detector::kSobel);
}

TEST_CASE("ablation axis names parse both spellings") {
  CHECK(e2p::ablation_axis_from_string("loss") == e2p::AblationAxis::kLossTerms);
  CHECK(e2p::ablation_axis_from_string("LOSS_TERMS") ==
        e2p::AblationAxis::kLossTerms);
  CHECK(e2p::ablation_axis_from_string("edge") ==
        e2p::AblationAxis::kEdgeDetector);
  CHECK(e2p::ablation_axis_from_string("EDGE_DETECTOR") ==
        e2p::AblationAxis::kEdgeDetector);
  CHECK_THROWS_AS(e2p::ablation_axis_from_string("backbone"), e2p::ConfigError);
}

TEST_CASE("assemble_report aggregates runs from a directory tree") {
  const fs::path dir = temp_dir("assemble");
  fs::create_directories(dir / "run_a");
  fs::create_directories(dir / "run_b" / "nested");

  e2p::write_metrics_csv(dir / "run_a" / "metrics.csv",
                         make_report("FULL_MIXED", e2p::Scope::kId, {0.9, 0.8}),
                         e2p::PipelineKind::kEdge2Prompt);
  e2p::write_metrics_csv(dir / "run_a" / "baseline.csv",
                         make_report("FULL_MIXED", e2p::Scope::kId, {0.6, 0.5}),
                         e2p::PipelineKind::kImUnet);
  e2p::write_metrics_csv(
      dir / "run_b" / "nested" / "ood.csv",
      make_report("CROSS_MR_TO_CT", e2p::Scope::kOod, {0.7, 0.75}),
      e2p::PipelineKind::kEdge2Prompt);
  e2p::write_metrics_csv(
      dir / "run_b" / "id.csv",
      make_report("CROSS_MR_TO_CT", e2p::Scope::kId, {0.85, 0.95}),
      e2p::PipelineKind::kEdge2Prompt);
  e2p::write_ablation_csv(dir / "run_b" / "ablation.csv", make_loss_ablation());
  e2p::write_ablation_csv(dir / "run_b" / "edges.csv",
                          make_edge_ablation(0.68, 0.84, 0.85));

  // Unrelated files are ignored, not fatal.
  std::ofstream(dir / "notes.txt") << "hello\n";
  std::ofstream(dir / "run_a" / "random.csv") << "a,b\n1,2\n";

  e2p::ReportBundle bundle = e2p::assemble_report(dir);
  CHECK(bundle.runs.size() == 4);
  CHECK(bundle.ablations.size() == 2);

  // Mixed table: Ours and imU-Net rows with rendered percentages.
  CHECK(bundle.mixed_table_text.find("Ours") != std::string::npos);
  CHECK(bundle.mixed_table_text.find("imU-Net") != std::string::npos);
  CHECK(bundle.mixed_table_text.find("85.0") != std::string::npos);

  // Cross table carries both scopes for the MR-trained row.
  CHECK(bundle.cross_table_text.find("OOD Dice") != std::string::npos);
  CHECK(bundle.cross_table_text.find("| MR") != std::string::npos);
  CHECK(bundle.cross_table_text.find("90.0") != std::string::npos);
  CHECK(bundle.cross_table_text.find("72.5") != std::string::npos);

  // Ablation tables list every variant.
  CHECK(bundle.loss_ablation_text.find("F+D+LCD") != std::string::npos);
  CHECK(bundle.edge_ablation_text.find("laplacian") != std::string::npos);

  // Footer: conventions plus the mdice line for the cross protocol
  // (mean of 90.0 and 72.5 is 81.2 at one decimal), plus the edge check.
  CHECK(bundle.footer_text.find("population") != std::string::npos);
  CHECK(bundle.footer_text.find("mdice") != std::string::npos);
  CHECK(bundle.footer_text.find("81.2") != std::string::npos);
  CHECK(bundle.footer_text.find("PASS") != std::string::npos);

  const std::string full = bundle.full_text();
  CHECK(full.find(bundle.mixed_table_text) != std::string::npos);
  CHECK(full.find(bundle.footer_text) != std::string::npos);

  // write_report drops all artifacts into the out dir.
  const fs::path out = dir / "report";
  e2p::write_report(bundle, out);
  CHECK(fs::exists(out / "report.txt"));
  CHECK(fs::exists(out / "mixed_table.txt"));
  CHECK(fs::exists(out / "mixed_table.csv"));
  CHECK(fs::exists(out / "cross_table.txt"));
  CHECK(fs::exists(out / "loss_ablation.txt"));
  CHECK(fs::exists(out / "edge_ablation.csv"));

  fs::remove_all(dir);
}

TEST_CASE("edge ordering soft check pivots on the laplacian gap") {
  const fs::path dir = temp_dir("softcheck");

  // Laplacian close to sobel: the ordering claim must warn, not pass.
  e2p::write_ablation_csv(dir / "edges.csv",
                          make_edge_ablation(0.83, 0.84, 0.85));
  e2p::write_metrics_csv(dir / "m.csv",
                         make_report("FULL_MIXED", e2p::Scope::kId, {0.9}),
                         e2p::PipelineKind::kEdge2Prompt);
  e2p::ReportBundle warn_bundle = e2p::assemble_report(dir);
  CHECK(warn_bundle.footer_text.find("WARN") != std::string::npos);

  // Clear laplacian gap with sobel and canny in parity: PASS.
  e2p::write_ablation_csv(dir / "edges.csv",
                          make_edge_ablation(0.60, 0.84, 0.85));
  e2p::ReportBundle pass_bundle = e2p::assemble_report(dir);
  CHECK(pass_bundle.footer_text.find("PASS") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("empty runs directory is a startup error") {
  const fs::path dir = temp_dir("empty");
  CHECK_THROWS_WITH_AS(e2p::assemble_report(dir),
                       doctest::Contains("no metrics or ablation CSVs"),
                       e2p::StartupError);
  fs::remove_all(dir);
}
