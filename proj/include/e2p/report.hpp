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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "e2p/ablation.hpp"
#include "e2p/config.hpp"
#include "e2p/metrics.hpp"

namespace e2p {

/// One evaluation run as persisted by `eval --out`.
struct RunMetrics {
  std::string protocol;
  Scope scope = Scope::kId;
  PipelineKind pipeline = PipelineKind::kEdge2Prompt;
  std::vector<MetricEntry> per_volume;
  MetricSummary summary;  // recomputed from rows on read
};

void write_metrics_csv(const std::filesystem::path& path,
                       const MetricReport& report, PipelineKind pipeline);
RunMetrics read_metrics_csv(const std::filesystem::path& path);

/// Display label for table rows.
std::string display_name(PipelineKind kind);

/// Aggregated tables built from every metrics/ablation CSV found under a
/// runs directory (recursive scan, files recognized by their header line).
struct ReportBundle {
  std::vector<RunMetrics> runs;
  std::vector<AblationReport> ablations;

  std::string mixed_table_text;       // trained-on-mixed comparison
  std::string cross_table_text;       // cross-modality ID/OOD comparison
  std::string loss_ablation_text;
  std::string edge_ablation_text;
  std::string footer_text;            // conventions, mdice lines, soft checks

  std::string mixed_table_csv;
  std::string cross_table_csv;
  std::string loss_ablation_csv;
  std::string edge_ablation_csv;

  std::string full_text() const;
};

ReportBundle assemble_report(const std::filesystem::path& runs_dir);

/// Writes the four tables (text + csv twins) plus the footer into out_dir.
void write_report(const ReportBundle& bundle,
                  const std::filesystem::path& out_dir);

}  // namespace e2p
