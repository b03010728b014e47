#include "magt/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "magt/rng.hpp"

namespace magt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Column reduction with reduction transfer, then Dijkstra-style shortest
// augmenting paths for the remaining free rows. The augmenting row reduction
// phase is left out: on clustered geometric costs it cycles for O(n^3) work.
// x[i]: column of row i, y[j]: row of column j, v: column duals.
class JonkerVolgenant {
 public:
  explicit JonkerVolgenant(const Matrix& cost)
      : n_(static_cast<int>(cost.rows())), c_(cost.data()), x_(n_, -1), y_(n_, -1), v_(n_, kInf) {}

  std::vector<int> solve() {
    std::vector<int> free_rows(n_);
    int n_free = column_reduction(free_rows);
    if (n_free > 0) augment(free_rows, n_free);
    return x_;
  }

 private:
  double cost(int i, int j) const { return c_[static_cast<std::size_t>(i) * n_ + j]; }

  int column_reduction(std::vector<int>& free_rows) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double c = cost(i, j);
        if (c < v_[j]) {
          v_[j] = c;
          y_[j] = i;
        }
      }
    std::vector<char> unique(n_, 1);
    for (int j = n_ - 1; j >= 0; --j) {
      const int i = y_[j];
      if (x_[i] < 0) {
        x_[i] = j;
      } else {
        unique[i] = 0;
        y_[j] = -1;
      }
    }
    int n_free = 0;
    for (int i = 0; i < n_; ++i) {
      if (x_[i] < 0) {
        free_rows[n_free++] = i;
      } else if (unique[i]) {
        const int j = x_[i];
        double best = kInf;
        for (int j2 = 0; j2 < n_; ++j2)
          if (j2 != j) best = std::min(best, cost(i, j2) - v_[j2]);
        if (best < kInf) v_[j] -= best;
      }
    }
    return n_free;
  }

  // Collects the columns with minimal d among cols[lo..) into cols[lo..hi).
  int find_minimum(int lo, const std::vector<double>& d, std::vector<int>& cols) const {
    int hi = lo + 1;
    double mind = d[cols[lo]];
    for (int k = hi; k < n_; ++k) {
      const int j = cols[k];
      if (d[j] <= mind) {
        if (d[j] < mind) {
          hi = lo;
          mind = d[j];
        }
        cols[k] = cols[hi];
        cols[hi++] = j;
      }
    }
    return hi;
  }

  // lo/hi are written back only when no free column was reached, so the
  // caller still sees the minimal-d block at cols[lo] after a hit.
  int scan(int& lo_io, int& hi_io, std::vector<double>& d, std::vector<int>& cols, std::vector<int>& pred) const {
    int lo = lo_io;
    int hi = hi_io;
    while (lo != hi) {
      int j = cols[lo++];
      const int i = y_[j];
      const double mind = d[j];
      const double h = cost(i, j) - v_[j] - mind;
      for (int k = hi; k < n_; ++k) {
        j = cols[k];
        const double reduced = cost(i, j) - v_[j] - h;
        if (reduced < d[j]) {
          d[j] = reduced;
          pred[j] = i;
          if (reduced == mind) {
            if (y_[j] < 0) return j;
            cols[k] = cols[hi];
            cols[hi++] = j;
          }
        }
      }
    }
    lo_io = lo;
    hi_io = hi;
    return -1;
  }

  int find_path(int start, std::vector<int>& pred) {
    std::vector<int> cols(n_);
    std::vector<double> d(n_);
    std::iota(cols.begin(), cols.end(), 0);
    for (int j = 0; j < n_; ++j) {
      d[j] = cost(start, j) - v_[j];
      pred[j] = start;
    }
    int lo = 0;
    int hi = 0;
    int n_ready = 0;
    int final_j = -1;
    while (final_j < 0) {
      if (lo == hi) {
        n_ready = lo;
        hi = find_minimum(lo, d, cols);
        for (int k = lo; k < hi; ++k)
          if (y_[cols[k]] < 0) {
            final_j = cols[k];
            break;
          }
      }
      if (final_j < 0) final_j = scan(lo, hi, d, cols, pred);
    }
    const double mind = d[cols[lo]];
    for (int k = 0; k < n_ready; ++k) {
      const int j = cols[k];
      v_[j] += d[j] - mind;
    }
    return final_j;
  }

  void augment(const std::vector<int>& free_rows, int n_free) {
    std::vector<int> pred(n_);
    for (int f = 0; f < n_free; ++f) {
      const int start = free_rows[f];
      int j = find_path(start, pred);
      int i = -1;
      while (i != start) {
        i = pred[j];
        y_[j] = i;
        std::swap(j, x_[i]);
      }
    }
  }

  int n_;
  const double* c_;
  std::vector<int> x_;
  std::vector<int> y_;
  std::vector<double> v_;
};

Matrix squared_distances(const Matrix& a, const Matrix& b) {
  Matrix cost(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) cost(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return cost;
}

Matrix take_rows(const Matrix& src, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  return out;
}

std::vector<Eigen::Index> subsample(Rng& rng, Eigen::Index total, Eigen::Index count) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

std::vector<int> solve_assignment(const Matrix& cost) {
  require_dims(cost.rows() == cost.cols(), "assignment: cost matrix must be square");
  if (cost.rows() == 0) return {};
  if (!cost.allFinite()) throw NumericalError("assignment: non-finite cost");
  return JonkerVolgenant(cost).solve();
}

double w2_exact(const Matrix& a, const Matrix& b) {
  require_dims(a.rows() == b.rows(), "w2_exact: point sets differ in size");
  require_dims(a.cols() == b.cols(), "w2_exact: point dimensions differ");
  if (a.rows() == 0) throw ConfigError("w2_exact: empty point sets");
  if (a.rows() > kMaxExactW2Points)
    throw ConfigError("w2_exact: at most " + std::to_string(kMaxExactW2Points) + " points");
  const Matrix cost = squared_distances(a, b);
  const std::vector<int> match = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
  return std::sqrt(std::max(total, 0.0) / static_cast<double>(a.rows()));
}

W2Estimate w2_subsampled(const Matrix& a, const Matrix& b, Eigen::Index points, int repeats,
                         std::uint64_t seed) {
  if (points < 1 || points > a.rows() || points > b.rows())
    throw ConfigError("w2_subsampled: subsample size must be in [1, min(|a|, |b|)]");
  if (repeats < 1) throw ConfigError("w2_subsampled: repeats must be positive");
  W2Estimate est;
  Rng rng(seed, Stream::Subsample);
  for (int r = 0; r < repeats; ++r) {
    // Equal-size sets share one index draw. The indices are independent of
    // the data, so for i.i.d. rows this changes nothing in distribution, and
    // a set compared with itself scores exactly 0.
    const bool shared = a.rows() == b.rows();
    const auto ia = subsample(rng, a.rows(), points);
    const Matrix sa = points == a.rows() ? a : take_rows(a, ia);
    const Matrix sb = points == b.rows() ? b : take_rows(b, shared ? ia : subsample(rng, b.rows(), points));
    est.values.push_back(w2_exact(sa, sb));
  }
  est.mean = std::accumulate(est.values.begin(), est.values.end(), 0.0) / repeats;
  if (repeats > 1) {
    double ss = 0.0;
    for (double v : est.values) ss += (v - est.mean) * (v - est.mean);
    est.sd = std::sqrt(ss / (repeats - 1));
  }
  return est;
}

Timing timing_harness(const std::function<long(Eigen::Index)>& sampler, Eigen::Index n) {
  sampler(n);
  const auto start = std::chrono::steady_clock::now();
  const long nfe = sampler(n);
  const auto stop = std::chrono::steady_clock::now();
  return Timing{std::chrono::duration<double>(stop - start).count(), nfe};
}

}  // namespace magt
