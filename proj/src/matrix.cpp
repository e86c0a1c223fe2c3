#include "waver/matrix.hpp"

#include "waver/error.hpp"

#include <cmath>
#include <string>

namespace waver {

matrix::matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw error(errc::dimension_mismatch,
                    "matrix: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " needs " + std::to_string(rows_ * cols_) + " values, got " +
                        std::to_string(values_.size()));
    }
}

matrix matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto & row : rows) {
        if (row.size() != m.cols_) {
            throw error(errc::dimension_mismatch, "matrix::from_rows: ragged rows");
        }
        std::size_t c = 0;
        for (double v : row) {
            m(r, c++) = v;
        }
        ++r;
    }
    return m;
}

matrix matrix::identity(std::size_t n) {
    matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

matrix matrix::scalar(double v) {
    matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

matrix matrix::row_vector(std::span<const double> v) {
    matrix m(1, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(0, i) = v[i];
    }
    return m;
}

bool matrix::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw error(errc::dimension_mismatch,
                    "dot: lengths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw error(errc::dimension_mismatch,
                    "cosine_similarity: lengths " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na < k_zero_norm_eps || nb < k_zero_norm_eps) {
        throw error(errc::zero_norm, "cosine_similarity: vector norm below 1e-12");
    }
    return dot(a, b) / (na * nb);
}

matrix matmul(const matrix & a, const matrix & b) {
    if (a.cols() != b.rows()) {
        throw error(errc::dimension_mismatch,
                    "matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

matrix matmul_nt(const matrix & a, const matrix & b) {
    if (a.cols() != b.cols()) {
        throw error(errc::dimension_mismatch,
                    "matmul_nt: inner dims " + std::to_string(a.cols()) + " vs " +
                        std::to_string(b.cols()));
    }
    matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

matrix transpose(const matrix & m) {
    matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

matrix softmax_rows(const matrix & m) {
    matrix out(m.rows(), m.cols());
    if (m.cols() == 0) {
        return out;
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        double mx = row[0];
        for (double v : row) {
            mx = std::max(mx, v);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double e = std::exp(row[j] - mx);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) /= sum;
        }
    }
    return out;
}

matrix l2_normalize_rows(const matrix & m) {
    matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double n = l2_norm(m.row(i));
        if (n < k_zero_norm_eps) {
            throw error(errc::zero_norm, "l2_normalize_rows: row " + std::to_string(i) +
                                             " has norm below 1e-12");
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = m(i, j) / n;
        }
    }
    return out;
}

std::vector<double> mean_pool_rows(const matrix & m) {
    if (m.rows() == 0) {
        throw error(errc::empty_input, "mean_pool_rows: no rows");
    }
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out[j] += m(i, j);
        }
    }
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double & v : out) {
        v *= inv;
    }
    return out;
}

} // namespace waver
