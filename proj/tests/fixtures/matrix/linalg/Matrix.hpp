#pragma once
#include <map>
#include <utility>

namespace linalg {

/// Sparse matrix keyed by (row, col).
class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double get(int r, int c) const {
        auto it = cells_.find({r, c});
        return it == cells_.end() ? 0.0 : it->second;
    }

    void set(int r, int c, double v) { cells_[{r, c}] = v; }

    linalg::Matrix add(const linalg::Matrix& o) const {
        Matrix sum(rows_, cols_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c)
                sum.set(r, c, get(r, c) + o.get(r, c));
        return sum;
    }

private:
    int rows_;
    int cols_;
    std::map<std::pair<int, int>, double> cells_;
};

}  // namespace linalg
