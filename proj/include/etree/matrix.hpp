#pragma once
#include <cstddef>
#include <span>
#include <vector>

namespace etree {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[idx(r, c)]; }
    double operator()(int r, int c) const { return data_[idx(r, c)]; }

    double* row(int r) { return data_.data() + idx(r, 0); }
    const double* row(int r) const { return data_.data() + idx(r, 0); }
    std::span<const double> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols_)}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t idx(int r, int c) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
    }
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Pairwise-distance matrix over the m observations of one node: symmetric,
// zero diagonal, nonnegative entries.
struct DistanceMatrix {
    int m = 0;
    std::vector<double> d;  // m*m, row-major

    static DistanceMatrix zeros(int m) {
        return DistanceMatrix{m, std::vector<double>(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0)};
    }
    double operator()(int k, int l) const { return d[static_cast<std::size_t>(k) * m + l]; }
    double& at(int k, int l) { return d[static_cast<std::size_t>(k) * m + l]; }
    const double* row(int k) const { return d.data() + static_cast<std::size_t>(k) * m; }
};

// Restriction of a distance matrix to a subset of its rows/columns. Node-level
// matrices are slices of the root-level matrix, which avoids recomputing
// distances during recursion (entries are identical by determinism of the
// kernels).
inline DistanceMatrix slice(const DistanceMatrix& full, std::span<const int> rows) {
    DistanceMatrix out = DistanceMatrix::zeros(static_cast<int>(rows.size()));
    for (int k = 0; k < out.m; ++k) {
        const double* src = full.row(rows[static_cast<std::size_t>(k)]);
        double* dst = out.d.data() + static_cast<std::size_t>(k) * out.m;
        for (int l = 0; l < out.m; ++l) dst[l] = src[rows[static_cast<std::size_t>(l)]];
    }
    return out;
}

}  // namespace etree
