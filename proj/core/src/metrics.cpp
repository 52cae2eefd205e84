#include "wafer/metrics.hpp"

#include "wafer/errors.hpp"

namespace wafer {

Confusion::Confusion(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
  if (classes < 1) throw ConfigError("confusion matrix needs at least one class");
}

void Confusion::add(int truth, int predicted, long count) {
  if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
    throw DataError("confusion: class index out of range");
  }
  counts_[static_cast<std::size_t>(truth * classes_ + predicted)] += count;
}

void Confusion::merge(const Confusion& other) {
  if (other.classes_ != classes_) throw DataError("confusion: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

long Confusion::count(int truth, int predicted) const {
  return counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

long Confusion::total() const {
  long t = 0;
  for (long c : counts_) t += c;
  return t;
}

long Confusion::row_total(int truth) const {
  long t = 0;
  for (int p = 0; p < classes_; ++p) t += count(truth, p);
  return t;
}

double Confusion::accuracy() const {
  const long t = total();
  if (t == 0) return 0.0;
  long correct = 0;
  for (int k = 0; k < classes_; ++k) correct += count(k, k);
  return static_cast<double>(correct) / static_cast<double>(t);
}

double Confusion::recall(int k) const {
  const long t = row_total(k);
  return t == 0 ? 0.0 : static_cast<double>(count(k, k)) / static_cast<double>(t);
}

double Confusion::macro_accuracy() const {
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < classes_; ++k) {
    if (row_total(k) == 0) continue;
    sum += recall(k);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

std::vector<std::vector<double>> Confusion::normalized() const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(classes_),
                                       std::vector<double>(static_cast<std::size_t>(classes_), 0.0));
  for (int t = 0; t < classes_; ++t) {
    const long rt = row_total(t);
    if (rt == 0) continue;
    for (int p = 0; p < classes_; ++p) {
      out[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
          static_cast<double>(count(t, p)) / static_cast<double>(rt);
    }
  }
  return out;
}

}  // namespace wafer
