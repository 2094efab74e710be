#include "clustem/efficacy.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include "clustem/error.hpp"

namespace clustem {

AttributeDomain AttributeDomain::from_vgh(const Vgh& vgh) {
  AttributeDomain d;
  d.attribute_ = vgh.attribute();
  d.leaves_ = vgh.leaves();
  std::sort(d.leaves_.begin(), d.leaves_.end());
  std::vector<std::size_t> position(vgh.leaf_count());
  for (std::size_t i = 0; i < vgh.leaf_count(); ++i) {
    position[i] = static_cast<std::size_t>(
        std::lower_bound(d.leaves_.begin(), d.leaves_.end(), vgh.leaves()[i]) - d.leaves_.begin());
  }
  for (std::size_t h = 0; h < vgh.level_count(); ++h) {
    for (std::size_t i = 0; i < vgh.leaf_count(); ++i) {
      auto& bits = d.labels_[vgh.label(h, i)];
      if (std::find(bits.begin(), bits.end(), position[i]) == bits.end()) bits.push_back(position[i]);
    }
  }
  for (auto& [label, bits] : d.labels_) std::sort(bits.begin(), bits.end());
  return d;
}

namespace {

bool is_set_label(std::string_view cell) {
  return cell.size() >= 2 && cell.front() == '{' && cell.back() == '}';
}

std::vector<std::string> split_set_label(std::string_view cell) {
  std::vector<std::string> out;
  std::string_view body = cell.substr(1, cell.size() - 2);
  std::size_t start = 0;
  while (true) {
    auto comma = body.find(',', start);
    out.emplace_back(body.substr(start, comma == std::string_view::npos ? body.size() - start : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

AttributeDomain AttributeDomain::from_values(std::string attribute,
                                             const std::vector<std::string>& cells) {
  AttributeDomain d;
  d.attribute_ = std::move(attribute);
  std::set<std::string> leaves;
  for (const auto& cell : cells) {
    if (cell == kSuppressed) continue;
    if (is_set_label(cell)) {
      for (auto& member : split_set_label(cell)) leaves.insert(std::move(member));
    } else {
      leaves.insert(cell);
    }
  }
  d.leaves_.assign(leaves.begin(), leaves.end());
  for (std::size_t i = 0; i < d.leaves_.size(); ++i) d.labels_[d.leaves_[i]] = {i};
  for (const auto& cell : cells) {
    if (!is_set_label(cell) || d.labels_.count(cell)) continue;
    std::vector<std::size_t> bits;
    for (const auto& member : split_set_label(cell)) {
      bits.push_back(static_cast<std::size_t>(
          std::lower_bound(d.leaves_.begin(), d.leaves_.end(), member) - d.leaves_.begin()));
    }
    std::sort(bits.begin(), bits.end());
    d.labels_[cell] = std::move(bits);
  }
  return d;
}

std::optional<std::vector<std::size_t>> AttributeDomain::decode(std::string_view cell) const {
  if (cell == kSuppressed) {
    std::vector<std::size_t> all(leaves_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  auto it = labels_.find(cell);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

namespace {

void check_binary_labels(const Column& train, const Column& test) {
  std::set<std::string> distinct(train.values.begin(), train.values.end());
  distinct.insert(test.values.begin(), test.values.end());
  if (distinct.size() > 2) {
    throw InputError("label column '" + train.name + "' has " + std::to_string(distinct.size()) +
                     " distinct values; a binary label is required");
  }
}

FeatureMatrix encode_one(const Table& table, const EncodeOptions& options,
                         const std::vector<const AttributeDomain*>& domains,
                         const Standardization& stats, const std::vector<std::string>& features,
                         std::size_t* unseen) {
  FeatureMatrix m;
  m.rows = table.row_count();
  m.features = features;
  m.data.assign(m.rows * features.size(), 0.0);

  std::size_t offset = 0;
  for (std::size_t a = 0; a < options.nominal.size(); ++a) {
    const Column& col = table.column(options.nominal[a]);
    const AttributeDomain& dom = *domains[a];
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto bits = dom.decode(col.values[r]);
      if (!bits) {
        if (unseen) ++*unseen;
        continue;
      }
      for (auto b : *bits) m.data[r * features.size() + offset + b] = 1.0;
    }
    offset += dom.leaves().size();
  }
  for (std::size_t n = 0; n < options.numeric.size(); ++n) {
    const Column& col = table.column(options.numeric[n]);
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto value = col.number(r);
      // Missing numbers are imputed with the training mean, i.e. 0 after scaling.
      double z = value ? (*value - stats.mean[n]) / stats.stddev[n] : 0.0;
      m.data[r * features.size() + offset + n] = z;
    }
  }

  const Column& label = table.column(options.label);
  m.labels.resize(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) m.labels[r] = label.values[r] == options.positive_class ? 1 : 0;
  return m;
}

}  // namespace

EncodedData encode(const Table& train, const Table& test, const EncodeOptions& options,
                   const std::vector<AttributeDomain>& domains) {
  check_binary_labels(train.column(options.label), test.column(options.label));

  std::vector<const AttributeDomain*> ordered;
  std::vector<std::string> features;
  for (const auto& name : options.nominal) {
    auto it = std::find_if(domains.begin(), domains.end(),
                           [&](const AttributeDomain& d) { return d.attribute() == name; });
    if (it == domains.end()) throw SpecError("no leaf domain for nominal feature '" + name + "'");
    ordered.push_back(&*it);
    for (const auto& leaf : it->leaves()) features.push_back(name + "=" + leaf);
  }

  EncodedData out;
  auto& stats = out.standardization;
  for (const auto& name : options.numeric) {
    const Column& col = train.column(name);
    if (col.kind != ColumnKind::Numeric) throw SpecError("feature '" + name + "' is not numeric");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < col.values.size(); ++r) {
      if (auto v = col.number(r)) {
        sum += *v;
        ++count;
      }
    }
    double mean = count ? sum / static_cast<double>(count) : 0.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < col.values.size(); ++r) {
      if (auto v = col.number(r)) ss += (*v - mean) * (*v - mean);
    }
    double sd = count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
    stats.columns.push_back(name);
    stats.mean.push_back(mean);
    stats.stddev.push_back(sd > 0.0 ? sd : 1.0);
    features.push_back(name);
  }

  out.train = encode_one(train, options, ordered, stats, features, nullptr);
  out.test = encode_one(test, options, ordered, stats, features, &out.unseen_test_cells);
  if (out.unseen_test_cells) {
    std::clog << "encode: " << out.unseen_test_cells
              << " test cells hold values outside the training domain; encoded as zero bits\n";
  }
  return out;
}

LogisticRegression LogisticRegression::constant(int label) {
  LogisticRegression m;
  m.constant_ = label;
  return m;
}

double LogisticRegression::probability(const FeatureMatrix& x, std::size_t row) const {
  if (constant_) return *constant_ ? 1.0 : 0.0;
  double z = bias_;
  const double* features = x.data.data() + row * x.cols();
  for (std::size_t c = 0; c < weights_.size(); ++c) z += weights_[c] * features[c];
  return 1.0 / (1.0 + std::exp(-z));
}

int LogisticRegression::predict(const FeatureMatrix& x, std::size_t row) const {
  if (constant_) return *constant_;
  return probability(x, row) >= 0.5 ? 1 : 0;
}

LogisticRegression train_classifier(const FeatureMatrix& train, std::uint64_t seed,
                                    const TrainOptions& options) {
  if (train.rows == 0) throw InputError("cannot train on an empty feature matrix");
  std::size_t positives = static_cast<std::size_t>(std::count(train.labels.begin(), train.labels.end(), 1));
  if (positives == 0 || positives == train.rows) {
    int sole = positives ? 1 : 0;
    std::clog << "train_classifier: training labels contain a single class; predicting "
              << sole << " everywhere\n";
    return LogisticRegression::constant(sole);
  }

  const std::size_t d = train.cols();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(train.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  const double lr = options.learning_rate;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with raw engine output keeps the order library-independent.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      const double* x = train.data.data() + idx * d;
      double z = b;
      for (std::size_t c = 0; c < d; ++c) z += w[c] * x[c];
      double p = 1.0 / (1.0 + std::exp(-z));
      double g = p - static_cast<double>(train.labels[idx]);
      for (std::size_t c = 0; c < d; ++c) w[c] -= lr * (g * x[c] + options.l2 * w[c]);
      b -= lr * g;
    }
  }
  return LogisticRegression(std::move(w), b);
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  std::size_t denom = 2 * tp + fp + fn;
  if (tp == 0 || denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

EfficacyReport evaluate(const LogisticRegression& model, const FeatureMatrix& test,
                        const std::string& positive_class) {
  if (test.rows == 0) throw InputError("cannot evaluate on an empty test set");
  EfficacyReport r;
  r.positive_class = positive_class;
  for (std::size_t i = 0; i < test.rows; ++i) {
    int predicted = model.predict(test, i);
    int actual = test.labels[i];
    if (predicted == 1 && actual == 1) ++r.true_positive;
    else if (predicted == 1) ++r.false_positive;
    else if (actual == 1) ++r.false_negative;
    else ++r.true_negative;
  }
  r.accuracy = static_cast<double>(r.true_positive + r.true_negative) / static_cast<double>(test.rows);
  r.f1 = f1_score(r.true_positive, r.false_positive, r.false_negative);
  return r;
}

}  // namespace clustem
