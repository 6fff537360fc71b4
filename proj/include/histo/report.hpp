#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "histo/metrics.hpp"

namespace histo {

/// One row of a comparison table.
struct ReportRow {
  std::string model;         // e.g. "ResNet50", "ResNet50 Pyramid", "ResNet50 with Tiling"
  std::string image_size;    // e.g. "(512,512)"
  std::string augmentation;  // "NO", "CUTMIX and MIXUP", "Stain Normalization"
  double dropout = 0.0;
  std::string loss;          // "CrossEntropy", "Focal Loss", "LabelSmoothing"
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double sensitivity = 0.0;
  std::string run_dir;
};

struct ComparisonTable {
  std::vector<ReportRow> rows;  // sorted by descending weighted F1
  std::size_t best = 0;         // index of the flagged best row
};

ComparisonTable build_table(std::vector<ReportRow> rows);

/// Header: model,image_size,augmentation,dropout,loss,accuracy,weighted_f1,sensitivity
std::string table_csv(const ComparisonTable& table);
/// Markdown with the best row in bold.
std::string table_markdown(const ComparisonTable& table);

/// Metrics rounded to three decimals, as printed in tables.
std::string format3(double v);

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);
void write_confusion_heatmap(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                             const std::filesystem::path& png_path);

/// Human-readable per-class table including false-positive/negative shares.
std::string metrics_text(const MetricsReport& report, const std::vector<std::string>& class_names);

}  // namespace histo
