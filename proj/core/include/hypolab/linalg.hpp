#pragma once

#include <Eigen/Dense>

#include "hypolab/errors.hpp"

namespace hypolab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Throws DimensionError unless v has exactly n entries.
inline void require_dim(const Vec& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                             ", got " + std::to_string(v.size()));
    }
}

/// Throws DimensionError unless M is rows x cols.
inline void require_dim(const Mat& M, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (M.rows() != rows || M.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()));
    }
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& M) { return M.allFinite(); }

}  // namespace hypolab
