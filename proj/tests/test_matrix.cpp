#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "waver/error.hpp"
#include "waver/matrix.hpp"
#include "waver/rng.hpp"

#include <cmath>
#include <vector>

using waver::matrix;

TEST_CASE("cosine similarity basics") {
    const std::vector<double> a{2, 0}, b{1, 0}, c{0, 1}, d{1, 1};
    CHECK(waver::cosine_similarity(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(waver::cosine_similarity(b, c) == doctest::Approx(0.0).epsilon(1e-12));
    // 1/sqrt(2), frozen from direct 64-bit evaluation
    CHECK(waver::cosine_similarity(d, b) == doctest::Approx(0.70710678118654746).epsilon(1e-12));
}

TEST_CASE("cosine similarity errors") {
    const std::vector<double> a{1, 0}, z{0, 0}, three{1, 2, 3};
    CHECK_THROWS_WITH_AS(waver::cosine_similarity(a, z), doctest::Contains("norm"), waver::error);
    try {
        waver::cosine_similarity(a, z);
    } catch (const waver::error & e) {
        CHECK(e.code() == waver::errc::zero_norm);
    }
    try {
        waver::cosine_similarity(a, three);
    } catch (const waver::error & e) {
        CHECK(e.code() == waver::errc::dimension_mismatch);
    }
}

TEST_CASE("cosine similarity is scale invariant") {
    waver::splitmix64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(14);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.next_symmetric();
            b[i] = rng.next_symmetric();
        }
        if (waver::l2_norm(a) < 1e-6 || waver::l2_norm(b) < 1e-6) {
            continue;
        }
        const double alpha = 0.01 + 10.0 * rng.next_unit();
        const double beta = 0.01 + 10.0 * rng.next_unit();
        std::vector<double> sa(n), sb(n);
        for (std::size_t i = 0; i < n; ++i) {
            sa[i] = alpha * a[i];
            sb[i] = beta * b[i];
        }
        CHECK(waver::cosine_similarity(sa, sb) ==
              doctest::Approx(waver::cosine_similarity(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("mean pool rows") {
    const matrix m = matrix::from_rows({{1, 2}, {3, 4}});
    const auto pooled = waver::mean_pool_rows(m);
    CHECK(pooled[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(pooled[1] == doctest::Approx(3.0).epsilon(1e-12));

    const auto single = waver::mean_pool_rows(matrix::from_rows({{5, 5}}));
    CHECK(single[0] == 5.0);
    CHECK(single[1] == 5.0);

    // 2/3 frozen from direct evaluation
    const auto thirds = waver::mean_pool_rows(matrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
    CHECK(thirds[0] == doctest::Approx(0.66666666666666663).epsilon(1e-12));
    CHECK(thirds[1] == doctest::Approx(0.66666666666666663).epsilon(1e-12));

    CHECK_THROWS_AS(waver::mean_pool_rows(matrix(0, 3)), waver::error);
}

TEST_CASE("mean pool commutes with row permutation") {
    waver::splitmix64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng.next_below(8);
        const std::size_t cols = 1 + rng.next_below(16);
        matrix m(rows, cols);
        for (double & v : m.flat()) {
            v = rng.next_symmetric();
        }
        std::vector<std::size_t> perm(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            perm[i] = i;
        }
        waver::deterministic_shuffle(std::span<std::size_t>(perm), rng);
        matrix shuffled(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                shuffled(i, j) = m(perm[i], j);
            }
        }
        const auto p1 = waver::mean_pool_rows(m);
        const auto p2 = waver::mean_pool_rows(shuffled);
        for (std::size_t j = 0; j < cols; ++j) {
            CHECK(p1[j] == doctest::Approx(p2[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax rows examples") {
    const matrix uniform = waver::softmax_rows(matrix::from_rows({{0, 0, 0}}));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(uniform(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    CHECK(waver::softmax_rows(matrix::from_rows({{-123.0}}))(0, 0) == 1.0);

    // e/(e+1) and 1/(e+1), frozen from direct 64-bit evaluation
    const matrix two = waver::softmax_rows(matrix::from_rows({{1, 0}}));
    CHECK(two(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(two(0, 1) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one, wide magnitude range") {
    waver::splitmix64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = 1 + rng.next_below(6);
        const std::size_t cols = 1 + rng.next_below(10);
        matrix m(rows, cols);
        for (double & v : m.flat()) {
            v = 1e4 * rng.next_symmetric();
        }
        const matrix sm = waver::softmax_rows(m);
        CHECK(sm.all_finite());
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                CHECK(sm(i, j) >= 0.0);
                sum += sm(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("l2 normalize rows") {
    const matrix a = waver::l2_normalize_rows(matrix::from_rows({{3, 4}}));
    CHECK(a(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

    const matrix b = waver::l2_normalize_rows(matrix::from_rows({{1, 0}}));
    CHECK(b(0, 0) == 1.0);
    CHECK(b(0, 1) == 0.0);

    const matrix c = waver::l2_normalize_rows(matrix::from_rows({{1, 1, 1, 1}}));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(c(0, j) == doctest::Approx(0.5).epsilon(1e-12));
    }

    try {
        waver::l2_normalize_rows(matrix::from_rows({{1, 1}, {0, 0}}));
        CHECK(false);
    } catch (const waver::error & e) {
        CHECK(e.code() == waver::errc::zero_norm);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("l2 normalize rows produces unit rows") {
    waver::splitmix64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng.next_below(8);
        const std::size_t cols = 1 + rng.next_below(16);
        matrix m(rows, cols);
        for (double & v : m.flat()) {
            v = 0.1 + rng.next_unit();
        }
        const matrix u = waver::l2_normalize_rows(m);
        for (std::size_t i = 0; i < rows; ++i) {
            CHECK(waver::l2_norm(u.row(i)) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("matmul against hand results") {
    const matrix a = matrix::from_rows({{1, 2}, {3, 4}});
    const matrix b = matrix::from_rows({{5, 6}, {7, 8}});
    const matrix c = waver::matmul(a, b);
    CHECK(c(0, 0) == 19.0);
    CHECK(c(0, 1) == 22.0);
    CHECK(c(1, 0) == 43.0);
    CHECK(c(1, 1) == 50.0);

    const matrix nt = waver::matmul_nt(a, b);
    CHECK(nt(0, 0) == 17.0); // [1,2]·[5,6]
    CHECK(nt(0, 1) == 23.0); // [1,2]·[7,8]

    CHECK_THROWS_AS(waver::matmul(a, matrix(3, 2)), waver::error);
}
