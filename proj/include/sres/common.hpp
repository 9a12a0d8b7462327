#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sres {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

// Every failure mode of the library carries a short machine-readable code
// (NoConvergence, FillInfeasible, ...) next to the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

constexpr double kPi = 3.14159265358979323846;

// Smooth step: 1 on ]-inf,1/2], 0 on [1,inf[, monotone in between.
double smooth_step(double s);
double smooth_step_deriv(double s);

}  // namespace sres
