#include "epcag/integrator.hpp"

#include "epcag/error.hpp"

#include <cmath>

namespace epcag {

double operator_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    if (m.rows() == 1 && m.cols() == 1) {
        return std::abs(m(0, 0));
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

int steps_for(double span, double max_step) {
    if (!(max_step > 0.0)) {
        throw InvalidParameter("integrator step must be positive");
    }
    const double k = std::ceil(std::abs(span) / max_step - 1e-9);
    return std::max(1, static_cast<int>(k));
}

Vector rk4_step(const VectorField& rhs, double t, const Vector& y, double h) {
    const Vector k1 = rhs(t, y);
    const Vector k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const Vector k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const Vector k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector rk4_integrate(const VectorField& rhs, double t0, const Vector& y0, double t1, int steps) {
    if (steps < 1) {
        throw InvalidParameter("rk4_integrate: steps must be positive");
    }
    const double h = (t1 - t0) / steps;
    Vector y = y0;
    for (int i = 0; i < steps; ++i) {
        const double t = (i == 0) ? t0 : t0 + i * h;
        y = rk4_step(rhs, t, y, h);
        if (!y.allFinite()) {
            throw IntegrationFailure("rk4_integrate: non-finite state");
        }
    }
    return y;
}

Matrix rk4_fundamental(const MatrixField& A, double t, double s, double max_step) {
    const int n = static_cast<int>(A(s).rows());
    const int steps = steps_for(t - s, max_step);
    const double h = (t - s) / steps;
    Matrix X = Matrix::Identity(n, n);
    for (int i = 0; i < steps; ++i) {
        const double r = s + i * h;
        const Matrix a0 = A(r);
        const Matrix am = A(r + 0.5 * h);
        const Matrix a1 = A(r + h);
        const Matrix k1 = a0 * X;
        const Matrix k2 = am * (X + 0.5 * h * k1);
        const Matrix k3 = am * (X + 0.5 * h * k2);
        const Matrix k4 = a1 * (X + h * k3);
        X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!X.allFinite()) {
        throw IntegrationFailure("fundamental matrix: non-finite entries");
    }
    return X;
}

Matrix rk4_fundamental_constant(const Matrix& A, double t, double s, double max_step) {
    const int n = static_cast<int>(A.rows());
    if (n == 0) {
        return Matrix(0, 0);
    }
    const int steps = steps_for(t - s, max_step);
    const double h = (t - s) / steps;
    // One RK4 step of X' = AX is multiplication by the degree-4 Taylor polynomial of e^{hA}.
    const Matrix I = Matrix::Identity(n, n);
    const Matrix hA = h * A;
    const Matrix hA2 = hA * hA;
    const Matrix step = I + hA + hA2 / 2.0 + hA2 * hA / 6.0 + hA2 * hA2 / 24.0;
    Matrix X = I;
    for (int i = 0; i < steps; ++i) {
        X = step * X;
    }
    if (!X.allFinite()) {
        throw IntegrationFailure("fundamental matrix: non-finite entries");
    }
    return X;
}

}  // namespace epcag
