/** @file types.hpp
 *  @brief Shared vector and matrix aliases.
 */
#pragma once

#include <Eigen/Dense>

#include <vector>

namespace qbsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A sample point (t, x, z) used by witnesses in check reports.
struct SamplePoint {
    double t = 0.0;
    Vec x;
    Mat z;
};

}  // namespace qbsde
