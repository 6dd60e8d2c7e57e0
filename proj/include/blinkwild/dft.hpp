#pragma once

#include <complex>

#include <Eigen/Core>

namespace blinkwild {

using RealGrid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unnormalised forward 2-D DFT of any size.
ComplexGrid dft2(const RealGrid& input);
ComplexGrid dft2(const ComplexGrid& input);

/// Inverse 2-D DFT scaled by 1 / (rows * cols).
ComplexGrid idft2(const ComplexGrid& spectrum);

/// Real part of the inverse DFT; the largest discarded imaginary magnitude is
/// written to max_imag when given.
RealGrid idft2_real(const ComplexGrid& spectrum, double* max_imag = nullptr);

}  // namespace blinkwild
