#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qr::kernel {

/// Dense row-major matrix of doubles. Vectors (biases, gains) are 1 x n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix row_vector(std::span<const double> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool all_finite() const;

  Matrix transposed() const;
  /// Rows [begin, begin + count).
  Matrix slice_rows(std::size_t begin, std::size_t count) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// out += a^T * b, without materializing the product.
void accumulate_tn(Matrix& out, const Matrix& a, const Matrix& b);

/// Adds a 1 x cols row vector to every row.
void add_row_vector(Matrix& m, const Matrix& row);
/// out(0, j) += sum_i m(i, j)
void accumulate_column_sums(Matrix& out, const Matrix& m);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace qr::kernel
