#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "dpmg/common.hpp"

namespace dpmg {

// Set partition in canonical form: the label of item 0 is 0 and every new
// label is the smallest unused integer.
class Partition {
 public:
  explicit Partition(const std::vector<std::int32_t>& labels) { canonicalize(labels); }

  static Partition all_together(std::size_t n) {
    return Partition(std::vector<std::int32_t>(n, 0));
  }

  static Partition all_singletons(std::size_t n) {
    std::vector<std::int32_t> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<std::int32_t>(i);
    return Partition(l);
  }

  const std::vector<std::int32_t>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  int n_blocks() const { return n_blocks_; }

  std::vector<int> block_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(n_blocks_), 0);
    for (auto l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  std::vector<std::vector<int>> blocks() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_blocks_));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      out[static_cast<std::size_t>(labels_[i])].push_back(static_cast<int>(i));
    }
    return out;
  }

  bool operator==(const Partition& other) const { return labels_ == other.labels_; }

 private:
  void canonicalize(const std::vector<std::int32_t>& raw) {
    if (raw.empty()) throw validation_error("Partition: empty label vector");
    labels_.resize(raw.size());
    std::unordered_map<std::int32_t, std::int32_t> remap;
    std::int32_t next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto it = remap.find(raw[i]);
      if (it == remap.end()) {
        it = remap.emplace(raw[i], next++).first;
      }
      labels_[i] = it->second;
    }
    n_blocks_ = next;
  }

  std::vector<std::int32_t> labels_;
  int n_blocks_ = 0;
};

inline int n_clusters(const Partition& p) { return p.n_blocks(); }

struct PartitionHash {
  std::size_t operator()(const Partition& p) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (auto l : p.labels()) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(l));
      h *= 0x100000001B3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Variation of information H(p1) + H(p2) - 2 I(p1, p2), natural logarithm.
inline double vi(const Partition& p1, const Partition& p2) {
  if (p1.size() != p2.size()) throw validation_error("vi: partitions differ in length");
  const double n = static_cast<double>(p1.size());
  const int k1 = p1.n_blocks();
  const int k2 = p2.n_blocks();
  std::vector<double> joint(static_cast<std::size_t>(k1) * static_cast<std::size_t>(k2), 0.0);
  std::vector<double> c1(static_cast<std::size_t>(k1), 0.0);
  std::vector<double> c2(static_cast<std::size_t>(k2), 0.0);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const auto a = static_cast<std::size_t>(p1.labels()[i]);
    const auto b = static_cast<std::size_t>(p2.labels()[i]);
    joint[a * static_cast<std::size_t>(k2) + b] += 1.0;
    c1[a] += 1.0;
    c2[b] += 1.0;
  }
  double h1 = 0.0, h2 = 0.0, mi = 0.0;
  for (double v : c1) h1 -= v / n * std::log(v / n);
  for (double v : c2) h2 -= v / n * std::log(v / n);
  for (int a = 0; a < k1; ++a) {
    for (int b = 0; b < k2; ++b) {
      const double v = joint[static_cast<std::size_t>(a) * static_cast<std::size_t>(k2) +
                             static_cast<std::size_t>(b)];
      if (v > 0.0) {
        mi += v / n * std::log((v * n) / (c1[static_cast<std::size_t>(a)] *
                                          c2[static_cast<std::size_t>(b)]));
      }
    }
  }
  const double d = h1 + h2 - 2.0 * mi;
  return d > 0.0 ? d : 0.0;
}

// Cross-tabulation of estimated blocks against reference labels, both ordered
// by decreasing size.
struct ConfusionMatrix {
  std::vector<std::int32_t> row_labels;   // estimated block ids, size-descending
  std::vector<std::int32_t> col_labels;   // reference label values, size-descending
  std::vector<std::vector<int>> counts;   // rows x cols
};

inline ConfusionMatrix confusion_matrix(const Partition& p,
                                        const std::vector<std::int32_t>& reference) {
  if (p.size() != reference.size()) {
    throw validation_error("confusion_matrix: length mismatch");
  }
  std::vector<std::int32_t> ref_values;
  std::unordered_map<std::int32_t, std::size_t> ref_index;
  for (auto r : reference) {
    if (ref_index.emplace(r, ref_values.size()).second) ref_values.push_back(r);
  }
  const std::size_t k1 = static_cast<std::size_t>(p.n_blocks());
  const std::size_t k2 = ref_values.size();
  std::vector<std::vector<int>> counts(k1, std::vector<int>(k2, 0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++counts[static_cast<std::size_t>(p.labels()[i])][ref_index[reference[i]]];
  }
  std::vector<std::size_t> row_order(k1), col_order(k2);
  for (std::size_t i = 0; i < k1; ++i) row_order[i] = i;
  for (std::size_t j = 0; j < k2; ++j) col_order[j] = j;
  auto row_size = [&](std::size_t r) {
    int s = 0;
    for (std::size_t j = 0; j < k2; ++j) s += counts[r][j];
    return s;
  };
  auto col_size = [&](std::size_t c) {
    int s = 0;
    for (std::size_t i = 0; i < k1; ++i) s += counts[i][c];
    return s;
  };
  std::stable_sort(row_order.begin(), row_order.end(),
                   [&](std::size_t a, std::size_t b) { return row_size(a) > row_size(b); });
  std::stable_sort(col_order.begin(), col_order.end(),
                   [&](std::size_t a, std::size_t b) { return col_size(a) > col_size(b); });
  ConfusionMatrix out;
  out.row_labels.reserve(k1);
  out.col_labels.reserve(k2);
  for (auto r : row_order) out.row_labels.push_back(static_cast<std::int32_t>(r));
  for (auto c : col_order) out.col_labels.push_back(ref_values[c]);
  out.counts.assign(k1, std::vector<int>(k2, 0));
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      out.counts[i][j] = counts[row_order[i]][col_order[j]];
    }
  }
  return out;
}

}  // namespace dpmg
