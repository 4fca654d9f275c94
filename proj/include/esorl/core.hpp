#ifndef ESORL_CORE_HPP_
#define ESORL_CORE_HPP_

#include <Eigen/Dense>

namespace esorl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace esorl

#endif  // ESORL_CORE_HPP_
