#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <utility>
#include <vector>

namespace manicore {

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// α! = Π α_i!
inline double multi_factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int ai : a) f *= factorial(ai);
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// All multi-indices in `nvars` variables with |α| ≤ cap, graded by degree.
// Lookup of α goes through a dense table in base (cap+1).
class MonomialBasis {
 public:
  MonomialBasis(int nvars, int cap) : nvars_(nvars), cap_(cap) {
    starts_.assign(cap + 2, 0);
    for (int d = 0; d <= cap; ++d) {
      starts_[d] = static_cast<int>(alphas_.size());
      MultiIndex a(nvars, 0);
      enumerate(a, 0, d);
    }
    starts_[cap + 1] = static_cast<int>(alphas_.size());
    std::size_t table = 1;
    for (int i = 0; i < nvars; ++i) table *= static_cast<std::size_t>(cap + 1);
    lookup_.assign(table, -1);
    for (int i = 0; i < size(); ++i) lookup_[key(alphas_[i])] = i;
    parent_.assign(size(), {-1, -1});
    for (int i = 1; i < size(); ++i) {
      const MultiIndex& a = alphas_[i];
      for (int v = 0; v < nvars; ++v) {
        if (a[v] > 0) {
          MultiIndex p = a;
          --p[v];
          parent_[i] = {index(p), v};
          break;
        }
      }
    }
  }

  int nvars() const { return nvars_; }
  int cap() const { return cap_; }
  int size() const { return static_cast<int>(alphas_.size()); }
  const MultiIndex& operator[](int i) const { return alphas_[i]; }
  int degree(int i) const { return total_degree(alphas_[i]); }
  int degree_begin(int d) const { return starts_[d]; }
  int degree_end(int d) const { return starts_[d + 1]; }

  // -1 when |α| > cap.
  int index(const MultiIndex& a) const {
    int s = 0;
    for (int ai : a) s += ai;
    if (s > cap_) return -1;
    return lookup_[key(a)];
  }

  // index of α+β, -1 when beyond cap
  int sum_index(int i, int j) const {
    if (degree(i) + degree(j) > cap_) return -1;
    std::size_t k = 0;
    const MultiIndex& a = alphas_[i];
    const MultiIndex& b = alphas_[j];
    for (int v = nvars_ - 1; v >= 0; --v) k = k * (cap_ + 1) + (a[v] + b[v]);
    return lookup_[k];
  }

  // (index of α − e_v, v) for the first nonzero slot v; (-1,-1) for α = 0
  std::pair<int, int> parent(int i) const { return parent_[i]; }

  static std::shared_ptr<const MonomialBasis> get(int nvars, int cap) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{nvars, cap}];
    if (!slot) slot = std::make_shared<const MonomialBasis>(nvars, cap);
    return slot;
  }

 private:
  void enumerate(MultiIndex& a, int pos, int left) {
    if (nvars_ == 0) {
      if (left == 0) alphas_.push_back(a);
      return;
    }
    if (pos == nvars_ - 1) {
      a[pos] = left;
      alphas_.push_back(a);
      a[pos] = 0;
      return;
    }
    for (int k = left; k >= 0; --k) {
      a[pos] = k;
      enumerate(a, pos + 1, left - k);
    }
    a[pos] = 0;
  }

  std::size_t key(const MultiIndex& a) const {
    std::size_t k = 0;
    for (int v = nvars_ - 1; v >= 0; --v) k = k * (cap_ + 1) + a[v];
    return k;
  }

  int nvars_;
  int cap_;
  std::vector<MultiIndex> alphas_;
  std::vector<int> starts_;
  std::vector<int> lookup_;
  std::vector<std::pair<int, int>> parent_;
};

}  // namespace manicore
