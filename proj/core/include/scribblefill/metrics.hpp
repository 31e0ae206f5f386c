#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scribblefill/types.hpp"

namespace scribblefill {

struct ClassCounts {
  ClassId id = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

/// Confusion tallies over a set of evaluated maps. Ground-truth kIgnored
/// pixels are skipped; a kIgnored prediction counts as FN for the gt class.
struct ConfusionCounts {
  std::vector<ClassCounts> classes;
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  explicit ConfusionCounts(const std::vector<ClassId>& ids = {});
  int index_of(ClassId id) const;
  /// Adds another tally over the same class list.
  void merge(const ConfusionCounts& other);
};

/// Adds one (pred, gt) pair. Throws ValidationError on dim mismatch or a
/// ground-truth id outside the class list.
void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionCounts& counts);

/// TP / (TP + FP + FN); nullopt when the denominator is zero.
/// Throws ValidationError for a class not in `counts`.
std::optional<double> iou(const ConfusionCounts& counts, ClassId id);
/// correct / total. Throws ValidationError when no pixel was valid.
double pixel_accuracy(const ConfusionCounts& counts);
/// Unweighted mean over classes with a defined IoU.
double mean_iou(const ConfusionCounts& counts);

/// Aligned per-class table followed by mIoU and Acc. `names` parallels
/// counts.classes (may be empty). `color` adds ANSI emphasis to the header.
std::string format_report_table(const ConfusionCounts& counts,
                                const std::vector<std::string>& names, bool color);
std::string format_report_json(const ConfusionCounts& counts,
                               const std::vector<std::string>& names);

}  // namespace scribblefill
