#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace fastglz {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseVector = Eigen::SparseVector<double>;

}  // namespace fastglz
