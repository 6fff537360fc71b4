#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace histo {

/// Invalid configuration or arguments; the run cannot start.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset or image content that cannot be processed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure or I/O failure during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal findings collected while building or transforming a dataset.
struct ValidationReport {
  struct Entry {
    std::string subject;  // file path or record id
    std::string reason;
  };
  std::vector<Entry> warnings;

  void warn(std::string subject, std::string reason) {
    warnings.push_back({std::move(subject), std::move(reason)});
  }
  bool empty() const { return warnings.empty(); }

  /// One line per entry: "<subject>\t<reason>".
  std::string to_text() const {
    std::string out;
    for (const auto& w : warnings) {
      out += w.subject;
      out += '\t';
      out += w.reason;
      out += '\n';
    }
    return out;
  }
};

}  // namespace histo
