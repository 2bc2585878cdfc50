#include "bregmm/sparse_op.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bregmm/rng.hpp"

namespace bregmm {

SparseNonnegOperator::SparseNonnegOperator(int rows, int cols,
                                           const std::vector<Triplet>& triplets)
    : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("SparseNonnegOperator: rows and cols must be positive");
  }
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::invalid_argument("SparseNonnegOperator: triplet index out of range");
    }
    if (!std::isfinite(t.value) || t.value < 0.0) {
      throw std::invalid_argument(
          "SparseNonnegOperator: entries must be finite and nonnegative");
    }
  }

  // Bucket by row, sort by column, merge duplicates, drop exact zeros.
  std::vector<std::vector<Entry>> by_row(static_cast<std::size_t>(rows));
  for (const auto& t : triplets) {
    if (t.value == 0.0) continue;
    by_row[static_cast<std::size_t>(t.row)].push_back({t.col, t.value});
  }
  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (int m = 0; m < rows; ++m) {
    auto& row = by_row[static_cast<std::size_t>(m)];
    std::sort(row.begin(), row.end(),
              [](const Entry& a, const Entry& b) { return a.col < b.col; });
    std::size_t w = 0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (w > 0 && row[w - 1].col == row[r].col) {
        row[w - 1].value += row[r].value;
      } else {
        row[w++] = row[r];
      }
    }
    row.resize(w);
    row_ptr_[static_cast<std::size_t>(m) + 1] =
        row_ptr_[static_cast<std::size_t>(m)] + static_cast<std::int64_t>(w);
  }
  entries_.reserve(static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(rows)]));
  for (auto& row : by_row) {
    entries_.insert(entries_.end(), row.begin(), row.end());
  }

  row_sums_ = Eigen::VectorXd::Zero(rows);
  col_sums_ = Eigen::VectorXd::Zero(cols);
  for (int m = 0; m < rows; ++m) {
    double s = 0.0;
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(m)];
         k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
      const Entry& e = entries_[static_cast<std::size_t>(k)];
      s += e.value;
      col_sums_[e.col] += e.value;
    }
    row_sums_[m] = s;
  }
}

SparseNonnegOperator::SparseNonnegOperator(const SparseNonnegOperator& other)
    : rows_(other.rows_),
      cols_(other.cols_),
      row_ptr_(other.row_ptr_),
      entries_(other.entries_),
      row_sums_(other.row_sums_),
      col_sums_(other.col_sums_),
      fwd_calls_(other.fwd_calls_.load()),
      adj_calls_(other.adj_calls_.load()) {}

SparseNonnegOperator::SparseNonnegOperator(SparseNonnegOperator&& other) noexcept
    : rows_(other.rows_),
      cols_(other.cols_),
      row_ptr_(std::move(other.row_ptr_)),
      entries_(std::move(other.entries_)),
      row_sums_(std::move(other.row_sums_)),
      col_sums_(std::move(other.col_sums_)),
      fwd_calls_(other.fwd_calls_.load()),
      adj_calls_(other.adj_calls_.load()) {}

SparseNonnegOperator& SparseNonnegOperator::operator=(SparseNonnegOperator&& other) noexcept {
  if (this != &other) {
    rows_ = other.rows_;
    cols_ = other.cols_;
    row_ptr_ = std::move(other.row_ptr_);
    entries_ = std::move(other.entries_);
    row_sums_ = std::move(other.row_sums_);
    col_sums_ = std::move(other.col_sums_);
    fwd_calls_.store(other.fwd_calls_.load());
    adj_calls_.store(other.adj_calls_.load());
  }
  return *this;
}

void SparseNonnegOperator::apply_forward(const Eigen::VectorXd& x,
                                         Eigen::VectorXd& out) const {
  if (x.size() != cols_) {
    throw std::invalid_argument("apply_forward: x has size " + std::to_string(x.size()) +
                                ", operator has " + std::to_string(cols_) + " columns");
  }
  out.resize(rows_);
  for (int m = 0; m < rows_; ++m) {
    double s = 0.0;
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(m)];
         k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
      const Entry& e = entries_[static_cast<std::size_t>(k)];
      s += e.value * x[e.col];
    }
    out[m] = s;
  }
  fwd_calls_.fetch_add(1, std::memory_order_relaxed);
}

void SparseNonnegOperator::apply_adjoint(const Eigen::VectorXd& u,
                                         Eigen::VectorXd& out) const {
  if (u.size() != rows_) {
    throw std::invalid_argument("apply_adjoint: u has size " + std::to_string(u.size()) +
                                ", operator has " + std::to_string(rows_) + " rows");
  }
  out = Eigen::VectorXd::Zero(cols_);
  for (int m = 0; m < rows_; ++m) {
    const double um = u[m];
    if (um == 0.0) continue;
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(m)];
         k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
      const Entry& e = entries_[static_cast<std::size_t>(k)];
      out[e.col] += e.value * um;
    }
  }
  adj_calls_.fetch_add(1, std::memory_order_relaxed);
}

Eigen::VectorXd SparseNonnegOperator::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out;
  apply_forward(x, out);
  return out;
}

Eigen::VectorXd SparseNonnegOperator::adjoint(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out;
  apply_adjoint(u, out);
  return out;
}

std::span<const SparseNonnegOperator::Entry> SparseNonnegOperator::row(int m) const {
  const auto lo = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(m)]);
  const auto hi = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(m) + 1]);
  return {entries_.data() + lo, hi - lo};
}

void SparseNonnegOperator::reset_call_counters() const {
  fwd_calls_.store(0);
  adj_calls_.store(0);
}

SparseNonnegOperator::Restricted SparseNonnegOperator::restrict_columns(
    const std::vector<std::uint8_t>& keep) const {
  if (static_cast<int>(keep.size()) != cols_) {
    throw std::invalid_argument("restrict_columns: keep mask size does not match cols");
  }
  std::vector<int> col_map(static_cast<std::size_t>(cols_), -1);
  int new_cols = 0;
  for (int c = 0; c < cols_; ++c) {
    if (keep[static_cast<std::size_t>(c)] != 0) col_map[static_cast<std::size_t>(c)] = new_cols++;
  }
  if (new_cols == 0) {
    throw std::invalid_argument("restrict_columns: keep mask selects no columns");
  }

  std::vector<Triplet> kept;
  std::vector<int> rows_kept;
  int new_row = 0;
  for (int m = 0; m < rows_; ++m) {
    bool any = false;
    for (const Entry& e : row(m)) {
      const int nc = col_map[static_cast<std::size_t>(e.col)];
      if (nc >= 0) {
        kept.push_back({new_row, nc, e.value});
        any = true;
      }
    }
    if (any) {
      rows_kept.push_back(m);
      ++new_row;
    }
  }
  if (new_row == 0) {
    throw std::invalid_argument("restrict_columns: restriction leaves an empty operator");
  }
  return {SparseNonnegOperator(new_row, new_cols, kept), std::move(rows_kept)};
}

double adjoint_check(const SparseNonnegOperator& op, int trials, std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto gx = rng::stream(seed, static_cast<std::uint64_t>(2 * t));
    auto gu = rng::stream(seed, static_cast<std::uint64_t>(2 * t + 1));
    Eigen::VectorXd x(op.cols()), u(op.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng::uniform(gx, -1.0, 1.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng::uniform(gu, -1.0, 1.0);
    const double lhs = op.forward(x).dot(u);
    const double rhs = x.dot(op.adjoint(u));
    worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
  }
  return worst;
}

}  // namespace bregmm
