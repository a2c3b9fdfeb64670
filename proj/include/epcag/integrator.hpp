#pragma once

#include "epcag/types.hpp"

#include <functional>

namespace epcag {

using VectorField = std::function<Vector(double t, const Vector& y)>;
using MatrixField = std::function<Matrix(double t)>;

/// One classical fourth-order Runge-Kutta step of size h.
Vector rk4_step(const VectorField& rhs, double t, const Vector& y, double h);

/// Integrates y' = rhs(t, y) from (t0, y0) to t1 with `steps` equal RK4 steps.
/// t1 < t0 integrates backward.
Vector rk4_integrate(const VectorField& rhs, double t0, const Vector& y0, double t1, int steps);

/// Solution operator of X' = A(t) X, X(s) = I, evaluated at t, using equal RK4
/// steps no longer than max_step.
Matrix rk4_fundamental(const MatrixField& A, double t, double s, double max_step);

/// Fixed matrix A: same as rk4_fundamental but without re-evaluating A.
Matrix rk4_fundamental_constant(const Matrix& A, double t, double s, double max_step);

int steps_for(double span, double max_step);

}  // namespace epcag
