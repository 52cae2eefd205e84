#pragma once

#include <string>
#include <vector>

namespace wafer {

// Square confusion matrix, rows = truth, columns = prediction.
class Confusion {
 public:
  Confusion() = default;
  explicit Confusion(int classes);

  void add(int truth, int predicted, long count = 1);
  void merge(const Confusion& other);

  int classes() const { return classes_; }
  long count(int truth, int predicted) const;
  long total() const;
  long row_total(int truth) const;

  // Fraction of correct predictions over all samples.
  double accuracy() const;
  // Recall of one class; 0 for a class without samples.
  double recall(int k) const;
  // Mean recall over classes that have samples ("mean accuracy over all classes").
  double macro_accuracy() const;
  // Rows divided by their totals (rows without samples stay zero).
  std::vector<std::vector<double>> normalized() const;

  bool operator==(const Confusion&) const = default;

 private:
  int classes_ = 0;
  std::vector<long> counts_;
};

}  // namespace wafer
