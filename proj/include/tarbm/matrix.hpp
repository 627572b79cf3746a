#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tarbm/errors.hpp"

namespace tarbm {

/// Dense row-major matrix of doubles.
///
/// Batches of vectors are stored one vector per row. Bias vectors are kept
/// as N×1 columns; since row-major storage makes an N×1 and a 1×N matrix
/// byte-identical, helpers that broadcast a bias across rows only check the
/// element count.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);
    static Matrix row(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    Matrix row_copy(std::size_t r) const;
    Matrix col_copy(std::size_t c) const;
    Matrix transpose() const;
    Matrix reshaped(std::size_t rows, std::size_t cols) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    std::string shape_string() const;

    // Exact element-wise comparison (bit-level for finite values).
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// a · b
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix sigmoid(const Matrix& x);
double sigmoid(double x) noexcept;
// log(1 + e^x) without overflow.
double softplus(double x) noexcept;

// Adds `bias` (any N×1 or 1×N shape with N = x.cols()) to every row.
void add_row_broadcast(Matrix& x, const Matrix& bias);
Matrix column_means(const Matrix& x);  // returns cols×1
double sum(const Matrix& x) noexcept;
double dot(std::span<const double> a, std::span<const double> b);
double max_abs(const Matrix& x) noexcept;
bool all_finite(const Matrix& x) noexcept;

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace tarbm
