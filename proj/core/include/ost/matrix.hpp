#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ost {

// Dense row-major matrix of doubles. All in-memory arithmetic in the
// library is 64-bit; on-disk payloads are 32-bit (see embed_io.hpp).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Row-wise nested initializer, convenient for fixtures: {{0, 1}, {1, 0}}.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  double sum() const;

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// outer(u, v)[i][j] = u[i] * v[j]
Matrix outer(std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double l2_norm(std::span<const double> a) noexcept;

// Throws DegenerateInputError if either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

// Arithmetic mean of all rows.
std::vector<double> mean_rows(const Matrix& m);

// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

// Sum with a fixed pairwise (tree) reduction order, so the result is
// reproducible regardless of how the inputs were produced.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace ost
