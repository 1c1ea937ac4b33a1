#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ojaflow {

/// Dense row-major real matrix. Sized for the small problems this library
/// targets (n up to a few dozen), so every kernel is a plain loop.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);
  std::vector<double> row(std::size_t i) const;
  std::vector<double> diagonal_entries() const;

  /// First `p` columns.
  Matrix leading_columns(std::size_t p) const;

  Matrix transpose() const;
  double trace() const;
  double frobenius_norm() const;
  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix m);
Matrix operator*(Matrix m, double s);
Matrix operator*(double s, Matrix m);
Matrix operator*(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

/// tr(AᵀB)
double frobenius_inner(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

Matrix symmetric_part(const Matrix& m);
Matrix skew_part(const Matrix& m);

/// ‖MᵀM − I‖_F; zero exactly when the columns are orthonormal.
double orthogonality_defect(const Matrix& m);
/// ‖M − Mᵀ‖_F
double symmetry_defect(const Matrix& m);

/// Diagonal matrix with the given entries times `m` (row scaling).
Matrix scale_rows(std::span<const double> d, const Matrix& m);
/// `m` times the diagonal matrix with the given entries (column scaling).
Matrix scale_cols(const Matrix& m, std::span<const double> d);

}  // namespace ojaflow
