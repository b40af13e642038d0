#include "qr/kernel/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qr/error.hpp"
#include "qr/kernel/parallel.hpp"

namespace qr::kernel {
namespace {

constexpr std::size_t kParallelFlops = std::size_t{1} << 20;

void check(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) throw Error(fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(), b.cols()));
}

// Splits the output of an (rows x cols) product with inner size k either by rows
// or by columns. Every output element is accumulated in the same order either way.
template <typename Fn>
void split_output(std::size_t rows, std::size_t cols, std::size_t k, Fn&& fn) {
  if (rows * cols * k < kParallelFlops || thread_count() == 1) {
    fn(0, rows, 0, cols);
    return;
  }
  if (rows >= 4 * thread_count()) {
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) { fn(r0, r1, 0, cols); });
  } else {
    parallel_for(cols, [&](std::size_t c0, std::size_t c1) { fn(0, rows, c0, c1); }, 64);
  }
}

}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t count) const {
  if (begin + count > rows_) throw Error("slice_rows: out of range");
  Matrix out(count, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols_), out.data_.begin());
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  check(same_shape(other), "operator+=", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) {
  a += b;
  return a;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(n, m);
  split_output(n, m, k, [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* out = c.row(i).data();
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a(i, p);
        if (aip == 0.0) continue;
        const double* brow = b.row(p).data();
        for (std::size_t j = c0; j < c1; ++j) out[j] += aip * brow[j];
      }
    }
  });
  return c;
}

void accumulate_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  check(a.rows() == b.rows(), "matmul_tn", a, b);
  if (c.rows() != a.cols() || c.cols() != b.cols()) throw Error("accumulate_tn: output shape mismatch");
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  split_output(n, m, k, [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.row(p).data();
      for (std::size_t i = r0; i < r1; ++i) {
        const double api = a(p, i);
        if (api == 0.0) continue;
        double* out = c.row(i).data();
        for (std::size_t j = c0; j < c1; ++j) out[j] += api * brow[j];
      }
    }
  });
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  accumulate_tn(c, a, b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.cols(), "matmul_nt", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix c(n, m);
  split_output(n, m, k, [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    for (std::size_t i = r0; i < r1; ++i) {
      const double* arow = a.row(i).data();
      for (std::size_t j = c0; j < c1; ++j) {
        const double* brow = b.row(j).data();
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        c(i, j) = s;
      }
    }
  });
  return c;
}

void add_row_vector(Matrix& m, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != m.cols()) throw Error("add_row_vector: shape mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row(0, j);
  }
}

void accumulate_column_sums(Matrix& out, const Matrix& m) {
  if (out.rows() != 1 || out.cols() != m.cols()) throw Error("accumulate_column_sums: shape mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  check(a.same_shape(b), "max_abs_diff", a, b);
  double d = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) d = std::max(d, std::abs(av[i] - bv[i]));
  return d;
}

}  // namespace qr::kernel
