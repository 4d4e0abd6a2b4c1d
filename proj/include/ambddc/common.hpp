#ifndef AMBDDC_COMMON_HPP
#define AMBDDC_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ambddc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Breakdown of a numerical kernel (indefinite pivot, singular system, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ambddc

#endif  // AMBDDC_COMMON_HPP
