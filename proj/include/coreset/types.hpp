#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace coreset {

using Index = Eigen::Index;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
/// Feature storage: one example per row.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Sorted list of example (or feature) indices.
using IndexSet = std::vector<std::size_t>;

} // namespace coreset
