#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace surfload {

/// Natural cubic interpolating spline with knots at the sample points.
/// Evaluation outside the knot range extrapolates the end segments.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n != y_.size() || n < 2)
            throw std::invalid_argument("CubicSpline: need >= 2 matching samples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("CubicSpline: abscissae must be strictly increasing");
        m_.assign(n, 0.0);
        if (n == 2) return;

        // Tridiagonal system for the interior second derivatives.
        std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 1; i < n - 2; ++i) {
            const double w = (x_[i + 1] - x_[i]) / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i-- > 0;) {
            const double t = (i + 1 < n - 2) ? upper[i] * m_[i + 2] : 0.0;
            m_[i + 1] = (rhs[i] - t) / diag[i];
        }
    }

    double operator()(double x) const {
        std::size_t i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double t = x - x_[i];
        const double s = x_[i + 1] - x;
        return (m_[i] * s * s * s + m_[i + 1] * t * t * t) / (6.0 * h) +
               (y_[i] / h - m_[i] * h / 6.0) * s + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * t;
    }

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

private:
    std::size_t segment(double x) const {
        if (x <= x_.front()) return 0;
        if (x >= x_.back()) return x_.size() - 2;
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        return lo;
    }

    std::vector<double> x_, y_, m_;
};

} // namespace surfload
