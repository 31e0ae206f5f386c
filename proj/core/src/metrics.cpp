#include "scribblefill/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "scribblefill/error.hpp"

namespace scribblefill {

ConfusionCounts::ConfusionCounts(const std::vector<ClassId>& ids) {
  for (ClassId id : ids) {
    if (index_of(id) >= 0) throw ValidationError("duplicate class id in confusion counts");
    classes.push_back({id, 0, 0, 0});
  }
}

int ConfusionCounts::index_of(ClassId id) const {
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k].id == id) return static_cast<int>(k);
  }
  return -1;
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.classes.size() != classes.size()) throw ValidationError("merge: class lists differ");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (other.classes[k].id != classes[k].id) throw ValidationError("merge: class lists differ");
    classes[k].tp += other.classes[k].tp;
    classes[k].fp += other.classes[k].fp;
    classes[k].fn += other.classes[k].fn;
  }
  correct += other.correct;
  total += other.total;
}

void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionCounts& counts) {
  if (pred.width != gt.width || pred.height != gt.height ||
      pred.labels.size() != gt.labels.size()) {
    throw ValidationError("prediction and ground truth dimensions differ");
  }
  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (std::size_t k = 0; k < counts.classes.size(); ++k) lookup[counts.classes[k].id] = static_cast<int>(k);

  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const ClassId g = gt.labels[i];
    if (g == kIgnored) continue;
    const int gk = lookup[g];
    if (gk < 0) {
      throw ValidationError("ground truth uses class id " + std::to_string(g) +
                            " which is not in the class table");
    }
    ++counts.total;
    const ClassId p = pred.labels[i];
    if (p == g) {
      ++counts.correct;
      ++counts.classes[static_cast<std::size_t>(gk)].tp;
      continue;
    }
    ++counts.classes[static_cast<std::size_t>(gk)].fn;
    if (p != kIgnored && lookup[p] >= 0) ++counts.classes[static_cast<std::size_t>(lookup[p])].fp;
  }
}

std::optional<double> iou(const ConfusionCounts& counts, ClassId id) {
  const int k = counts.index_of(id);
  if (k < 0) throw ValidationError("iou: unknown class " + std::to_string(id));
  const auto& c = counts.classes[static_cast<std::size_t>(k)];
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double pixel_accuracy(const ConfusionCounts& counts) {
  if (counts.total == 0) throw ValidationError("pixel_accuracy: no valid ground-truth pixels");
  return static_cast<double>(counts.correct) / static_cast<double>(counts.total);
}

double mean_iou(const ConfusionCounts& counts) {
  if (counts.total == 0) throw ValidationError("mean_iou: no valid ground-truth pixels");
  // Extended precision so the mean rounds once, e.g. (1/2 + 2/3) / 2 gives the double nearest 7/12.
  long double sum = 0.0L;
  int defined = 0;
  for (const auto& c : counts.classes) {
    const std::uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) continue;
    sum += static_cast<long double>(c.tp) / static_cast<long double>(denom);
    ++defined;
  }
  return defined > 0 ? static_cast<double>(sum / defined) : 0.0;
}

namespace {

std::string class_name(const std::vector<std::string>& names, std::size_t k, ClassId id) {
  if (k < names.size() && !names[k].empty()) return names[k];
  return std::to_string(id);
}

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

std::string format_report_table(const ConfusionCounts& counts,
                                const std::vector<std::string>& names, bool color) {
  std::vector<std::string> header;
  std::vector<std::string> row;
  for (std::size_t k = 0; k < counts.classes.size(); ++k) {
    header.push_back(class_name(names, k, counts.classes[k].id));
    const auto v = iou(counts, counts.classes[k].id);
    row.push_back(v ? percent(*v) : "-");
  }
  header.push_back("mIoU");
  row.push_back(percent(mean_iou(counts)));
  header.push_back("Acc.");
  row.push_back(percent(pixel_accuracy(counts)));

  std::ostringstream out;
  const char* bold = color ? "\x1b[1m" : "";
  const char* reset = color ? "\x1b[0m" : "";
  std::size_t label_w = 6;
  out << bold;
  out << std::string("class").append(label_w - 5, ' ');
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::size_t w = std::max(header[c].size(), row[c].size()) + 2;
    out << std::string(w - header[c].size(), ' ') << header[c];
  }
  out << reset << '\n';
  out << std::string("IoU").append(label_w - 3, ' ');
  for (std::size_t c = 0; c < row.size(); ++c) {
    const std::size_t w = std::max(header[c].size(), row[c].size()) + 2;
    out << std::string(w - row[c].size(), ' ') << row[c];
  }
  out << '\n';
  return out.str();
}

std::string format_report_json(const ConfusionCounts& counts,
                               const std::vector<std::string>& names) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t k = 0; k < counts.classes.size(); ++k) {
    const auto& c = counts.classes[k];
    const auto v = iou(counts, c.id);
    classes.push_back({{"id", c.id},
                       {"name", class_name(names, k, c.id)},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"iou", v ? nlohmann::json(*v) : nlohmann::json(nullptr)}});
  }
  nlohmann::json j = {{"classes", classes},
                      {"mean_iou", mean_iou(counts)},
                      {"pixel_accuracy", pixel_accuracy(counts)},
                      {"correct", counts.correct},
                      {"total", counts.total}};
  return j.dump(2);
}

}  // namespace scribblefill
