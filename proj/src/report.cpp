#include "histo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>
#include <stdexcept>

#include "histo/error.hpp"

namespace histo {

std::string format3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

ComparisonTable build_table(std::vector<ReportRow> rows) {
  if (rows.empty()) throw ConfigError("report: no completed runs");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return a.weighted_f1 > b.weighted_f1; });
  return {std::move(rows), 0};
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string dropout_text(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

}  // namespace

std::string table_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "model,image_size,augmentation,dropout,loss,accuracy,weighted_f1,sensitivity\n";
  for (const auto& r : table.rows) {
    out << csv_cell(r.model) << ',' << csv_cell(r.image_size) << ',' << csv_cell(r.augmentation) << ','
        << dropout_text(r.dropout) << ',' << csv_cell(r.loss) << ',' << format3(r.accuracy) << ','
        << format3(r.weighted_f1) << ',' << format3(r.sensitivity) << '\n';
  }
  return out.str();
}

std::string table_markdown(const ComparisonTable& table) {
  std::ostringstream out;
  out << "| Model | Image Size | Augmentation/Preprocessing | Dropout | Loss | Accuracy | F1 (weighted) | "
         "Sensitivity |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const char* b = i == table.best ? "**" : "";
    out << "| " << b << r.model << b << " | " << b << r.image_size << b << " | " << b << r.augmentation << b
        << " | " << b << dropout_text(r.dropout) << b << " | " << b << r.loss << b << " | " << b
        << format3(r.accuracy) << b << " | " << b << format3(r.weighted_f1) << b << " | " << b
        << format3(r.sensitivity) << b << " |\n";
  }
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  if (names.size() != cm.num_classes()) throw std::invalid_argument("confusion_csv: class name count mismatch");
  std::ostringstream out;
  out << "true\\pred";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < cm.num_classes(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < cm.num_classes(); ++j) out << ',' << cm(i, j);
    out << '\n';
  }
  return out.str();
}

void write_confusion_heatmap(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                             const std::filesystem::path& png_path) {
  if (names.size() != cm.num_classes()) throw std::invalid_argument("heatmap: class name count mismatch");
  const int k = static_cast<int>(cm.num_classes());
  const int cell = 64, margin = 70;
  const int size = margin + k * cell + 10;
  cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));

  // Row-normalised intensities so minority classes stay visible.
  cv::Mat shade(k, k, CV_8UC1);
  for (int i = 0; i < k; ++i) {
    const double row = static_cast<double>(cm.row_sum(i));
    for (int j = 0; j < k; ++j) {
      const double frac = row > 0 ? static_cast<double>(cm(i, j)) / row : 0.0;
      shade.at<std::uint8_t>(i, j) = static_cast<std::uint8_t>(std::lround(255.0 * frac));
    }
  }
  cv::Mat colored;
  cv::applyColorMap(shade, colored, cv::COLORMAP_VIRIDIS);

  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      cv::Rect r(margin + j * cell, margin + i * cell, cell, cell);
      const auto c = colored.at<cv::Vec3b>(i, j);
      cv::rectangle(canvas, r, cv::Scalar(c[0], c[1], c[2]), cv::FILLED);
      cv::rectangle(canvas, r, cv::Scalar(255, 255, 255), 1);
      const bool dark = shade.at<std::uint8_t>(i, j) < 128;
      cv::putText(canvas, std::to_string(cm(i, j)), {r.x + 6, r.y + cell / 2 + 6}, font, 0.5,
                  dark ? cv::Scalar(255, 255, 255) : cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    }
    cv::putText(canvas, names[i], {4, margin + i * cell + cell / 2 + 6}, font, 0.5, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
    cv::putText(canvas, names[i], {margin + i * cell + 6, margin - 12}, font, 0.5, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
  }
  cv::putText(canvas, "pred", {margin, 20}, font, 0.5, cv::Scalar(80, 80, 80), 1, cv::LINE_AA);
  cv::putText(canvas, "true", {4, margin - 12}, font, 0.5, cv::Scalar(80, 80, 80), 1, cv::LINE_AA);
  if (!cv::imwrite(png_path.string(), canvas)) throw DataError("cannot write heatmap: " + png_path.string());
}

std::string metrics_text(const MetricsReport& rep, const std::vector<std::string>& names) {
  if (names.size() != rep.per_class.size()) throw std::invalid_argument("metrics_text: class name count mismatch");
  std::ostringstream out;
  out << "samples          " << rep.total << '\n'
      << "accuracy         " << format3(rep.accuracy) << '\n'
      << "weighted_f1      " << format3(rep.weighted_f1) << '\n'
      << "sensitivity      " << format3(rep.sensitivity) << "  (macro recall)\n"
      << "weighted_recall  " << format3(rep.weighted_recall) << '\n'
      << "macro_f1         " << format3(rep.macro_f1) << "\n\n"
      << "class  precision  recall  f1     support  fn_rate  fp_rate\n";
  for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
    const auto& m = rep.per_class[c];
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-9s%s %-6s%s %-6s%s %-8lld %-8s %-8s\n", names[c].c_str(),
                  format3(m.precision).c_str(), m.precision_undefined ? "*" : " ", format3(m.recall).c_str(),
                  m.recall_undefined ? "*" : " ", format3(m.f1).c_str(), m.f1_undefined ? "*" : " ",
                  static_cast<long long>(m.support), format3(m.false_negative_rate).c_str(),
                  format3(m.false_positive_rate).c_str());
    out << line;
  }
  out << "(* denominator was zero; value defined as 0)\n";
  return out.str();
}

}  // namespace histo
