#pragma once

#include <Eigen/Dense>

namespace isaacs {

/// Largest state dimension handled by the library.
inline constexpr int kMaxDim = 3;
/// Largest noise dimension d1.
inline constexpr int kMaxNoise = 6;

// Fixed-capacity, runtime-sized Eigen types. Nothing here touches the heap,
// which matters inside Monte Carlo inner loops.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SqMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using SigmaMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxNoise>;
using NoiseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxNoise, 1>;

/// Coefficients of one linear operator L = a:D^2 + b.D - c, plus running cost f, at a point.
struct LocalCoeffs {
    SqMat a;
    Point b;
    double c = 0.0;
    double f = 0.0;
};

}  // namespace isaacs
