#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lsc {

// Dense row-major 2-D array.
template <typename T>
class Array2D {
public:
    Array2D() : rows_(0), cols_(0) {}
    Array2D(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    const T& operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    T& at(std::size_t i, std::size_t j) {
        if (i >= rows_ || j >= cols_) throw std::out_of_range("Array2D index");
        return data_[i * cols_ + j];
    }
    const T& at(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) throw std::out_of_range("Array2D index");
        return data_[i * cols_ + j];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Array2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<T> data_;
};

} // namespace lsc
