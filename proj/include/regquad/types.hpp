#pragma once

#include <Eigen/Dense>

namespace regquad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace regquad
