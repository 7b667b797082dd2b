#pragma once

#include <Eigen/Dense>

namespace vem {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Node-major storage: row i holds the values at grid node i, so the raw
// buffer of an N x k field is laid out node by node.
template <typename Scalar>
using NodeMatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using NodeMatrix = NodeMatrixX<double>;

}  // namespace vem
