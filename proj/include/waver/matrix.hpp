#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace waver {

// Dense row-major double matrix. The single numeric substrate for the whole
// pipeline; file payloads are float32 and get widened on load.
class matrix {
public:
    matrix() = default;

    matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

    matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static matrix identity(std::size_t n);
    static matrix scalar(double v);
    static matrix row_vector(std::span<const double> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double & operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> flat() { return values_; }
    std::span<const double> flat() const { return values_; }

    bool same_shape(const matrix & other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

inline constexpr double k_zero_norm_eps = 1e-12;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// a·b / (|a||b|); throws zero_norm below k_zero_norm_eps, dimension_mismatch on length.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

matrix matmul(const matrix & a, const matrix & b);
matrix matmul_nt(const matrix & a, const matrix & b); // a * b^T
matrix transpose(const matrix & m);

// Row-wise softmax with per-row max subtraction.
matrix softmax_rows(const matrix & m);

// Each row scaled to unit L2 norm; zero_norm names the offending row.
matrix l2_normalize_rows(const matrix & m);

// Column means over rows; empty_input when the matrix has no rows.
std::vector<double> mean_pool_rows(const matrix & m);

} // namespace waver
