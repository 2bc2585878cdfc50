#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bregmm {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Sparse nonnegative matrix H stored row-major (CSR).
//
// Rows are the natural access unit here: every separable majorant
// coefficient is a sum over rows m that needs H_{m,n} within row m. Entries
// are strictly positive (zeros dropped at construction, negatives and
// non-finite values rejected, duplicate (row, col) pairs summed). Row and
// column sums are precomputed; forward/adjoint application tallies live on
// the operator itself, atomically, so projector-call accounting covers every
// code path that touches H.
//
// Empty rows are representable (the projector drops them before handing the
// operator to a model); PoissonModel enforces strictly positive row sums
// where zeta_m = 1/row_sum is formed.
class SparseNonnegOperator {
 public:
  struct Entry {
    int col = 0;
    double value = 0.0;
  };

  // Empty 0 x 0 operator; a placeholder to move-assign into.
  SparseNonnegOperator() = default;
  SparseNonnegOperator(int rows, int cols, const std::vector<Triplet>& triplets);

  SparseNonnegOperator(const SparseNonnegOperator& other);
  SparseNonnegOperator(SparseNonnegOperator&& other) noexcept;
  SparseNonnegOperator& operator=(const SparseNonnegOperator&) = delete;
  SparseNonnegOperator& operator=(SparseNonnegOperator&& other) noexcept;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(entries_.size()); }

  const Eigen::VectorXd& row_sums() const { return row_sums_; }
  const Eigen::VectorXd& col_sums() const { return col_sums_; }

  // out = Hx; counts one forward application.
  void apply_forward(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  // out = H^T u; counts one adjoint application.
  void apply_adjoint(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const;

  std::span<const Entry> row(int m) const;

  std::uint64_t forward_calls() const { return fwd_calls_.load(); }
  std::uint64_t adjoint_calls() const { return adj_calls_.load(); }
  void reset_call_counters() const;

  // Field-of-view restriction: keep columns with keep[n] != 0 (renumbered in
  // order), drop rows that become empty. rows_kept maps new row -> old row.
  struct Restricted;
  Restricted restrict_columns(const std::vector<std::uint8_t>& keep) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<Entry> entries_;
  Eigen::VectorXd row_sums_;
  Eigen::VectorXd col_sums_;
  mutable std::atomic<std::uint64_t> fwd_calls_{0};
  mutable std::atomic<std::uint64_t> adj_calls_{0};
};

struct SparseNonnegOperator::Restricted {
  SparseNonnegOperator op;
  std::vector<int> rows_kept;
};

// Max over `trials` random pairs of |<Hx,u> - <x,H^T u>| / (1 + |<Hx,u>|).
double adjoint_check(const SparseNonnegOperator& op, int trials, std::uint64_t seed);

}  // namespace bregmm
