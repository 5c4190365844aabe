#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>

namespace mpmsa {

using Real = double;
using Index = Eigen::Index;

/// Lattice coordinates live on Z^{nd}; lengths (half-sides, ranges) are in grid units.
using GridCoord = std::int64_t;
using CoordVector = Eigen::Matrix<GridCoord, Eigen::Dynamic, 1>;

using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using SparseMatrixX = Eigen::SparseMatrix<Real>;

}  // namespace mpmsa
