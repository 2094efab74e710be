#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clustem/tabular.hpp"
#include "clustem/vgh.hpp"

namespace clustem {

// Leaf domain of one nominal attribute, used to turn (possibly generalized)
// cells into multi-hot bits.
class AttributeDomain {
 public:
  // Leaves and labels taken from a hierarchy.
  static AttributeDomain from_vgh(const Vgh& vgh);
  // Leaves observed in the given cells; "{a,b}" labels are split on ','.
  static AttributeDomain from_values(std::string attribute, const std::vector<std::string>& cells);

  const std::string& attribute() const noexcept { return attribute_; }
  const std::vector<std::string>& leaves() const noexcept { return leaves_; }

  // Leaf positions set by a cell. nullopt for values the domain cannot
  // place (unseen leaves).
  std::optional<std::vector<std::size_t>> decode(std::string_view cell) const;

 private:
  std::string attribute_;
  std::vector<std::string> leaves_;  // sorted
  std::map<std::string, std::vector<std::size_t>, std::less<>> labels_;
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::vector<std::string> features;
  std::vector<double> data;  // row-major, rows x features.size()
  std::vector<int> labels;   // 1 = positive class

  std::size_t cols() const noexcept { return features.size(); }
  double at(std::size_t r, std::size_t c) const { return data[r * features.size() + c]; }
};

struct Standardization {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct EncodeOptions {
  std::vector<std::string> nominal;  // multi-hot blocks, in this order
  std::vector<std::string> numeric;  // appended standardized
  std::string label;
  std::string positive_class;
};

struct EncodedData {
  FeatureMatrix train;
  FeatureMatrix test;
  Standardization standardization;  // fitted on train only
  std::size_t unseen_test_cells = 0;
};

// Domains must cover every nominal column. Labels must take at most two
// distinct values across both tables (InputError otherwise).
EncodedData encode(const Table& train, const Table& test, const EncodeOptions& options,
                   const std::vector<AttributeDomain>& domains);

struct TrainOptions {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
};

class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}
  static LogisticRegression constant(int label);

  double probability(const FeatureMatrix& x, std::size_t row) const;
  int predict(const FeatureMatrix& x, std::size_t row) const;

  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  std::optional<int> constant_label() const noexcept { return constant_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::optional<int> constant_;
};

// Per-sample gradient descent on the L2-regularized log loss with a seeded
// shuffle each epoch. Single-class data yields a constant model.
LogisticRegression train_classifier(const FeatureMatrix& train, std::uint64_t seed,
                                    const TrainOptions& options = {});

struct EfficacyReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::string positive_class;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
};

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

EfficacyReport evaluate(const LogisticRegression& model, const FeatureMatrix& test,
                        const std::string& positive_class);

}  // namespace clustem
