#pragma once
#include <vector>

class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), cells_(rows * cols) {}
    int rows() const { return rows_; }
    double get(int r, int c) const { return cells_[r * cols_ + c]; }
    void set(int r, int c, double v) { cells_[r * cols_ + c] = v; }
    Matrix add(const Matrix& other) const {
        Matrix out(rows_, cols_);
        out.cells_ = cells_ + other.cells_;
        return out;
    }
private:
    int rows_;
    int cols_;
    std::vector<double> cells_;
};
