// Test-only reference implementations, deliberately independent of the
// library's computation paths: a cyclic-Jacobi symmetric eigensolver (vs. the
// SVD-based loadings), a normal-equations solver via Gaussian elimination
// (vs. the orthogonal-decomposition least squares), a naive O(n^2) DFT (vs.
// the FFT periodogram), and brute-force helpers.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mealmeter/common.hpp"

namespace oracle {

// ---- symmetric eigendecomposition (cyclic Jacobi rotations) -------------------

struct EigResult {
    std::vector<double> values;          // descending
    Eigen::MatrixXd vectors;             // columns match values
};

inline EigResult jacobi_eigensymmetric(Eigen::MatrixXd a) {
    const auto n = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (off < 1e-24)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n);
                j(p, p) = c;
                j(q, q) = c;
                j(p, q) = s;
                j(q, p) = -s;
                a = j.transpose() * a * j;
                v = v * j;
            }
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });

    EigResult r;
    r.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        r.values.push_back(a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]));
        r.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return r;
}

// ---- least squares via the normal equations -------------------------------------

inline Eigen::VectorXd normal_equations_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    Eigen::MatrixXd ata = design.transpose() * design;
    Eigen::VectorXd atb = design.transpose() * y;
    const auto n = ata.rows();
    // plain Gaussian elimination with partial pivoting
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(ata(r, col)) > std::abs(ata(pivot, col)))
                pivot = r;
        if (ata(pivot, col) == 0.0)
            throw std::runtime_error("oracle: singular normal equations");
        if (pivot != col) {
            ata.row(pivot).swap(ata.row(col));
            std::swap(atb(pivot), atb(col));
        }
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double f = ata(r, col) / ata(col, col);
            ata.row(r) -= f * ata.row(col);
            atb(r) -= f * atb(col);
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double s = atb(r);
        for (Eigen::Index c = r + 1; c < n; ++c)
            s -= ata(r, c) * x(c);
        x(r) = s / ata(r, r);
    }
    return x;
}

// ---- naive DFT periodogram ---------------------------------------------------------

struct NaiveSpectrum {
    std::vector<double> power; // bins 1..floor(n/2), sums to population variance
    double total = 0.0;
};

inline NaiveSpectrum naive_periodogram(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(n);

    NaiveSpectrum s;
    const std::size_t bins = n / 2;
    for (std::size_t k = 1; k <= bins; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double a = -2.0 * 3.14159265358979323846 * static_cast<double>(k) *
                             static_cast<double>(t) / static_cast<double>(n);
            acc += (x[t] - mean) * std::complex<double>(std::cos(a), std::sin(a));
        }
        const bool nyquist = (n % 2 == 0) && k == bins;
        const double p = (nyquist ? 1.0 : 2.0) * std::norm(acc) /
                         (static_cast<double>(n) * static_cast<double>(n));
        s.power.push_back(p);
        s.total += p;
    }
    return s;
}

// ---- misc ------------------------------------------------------------------------------

inline double sorted_quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double h = static_cast<double>(xs.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size())
        return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

inline std::vector<double> random_segment(mealmeter::Rng& rng, std::size_t n, double mean = 0.0,
                                          double sd = 1.0) {
    std::vector<double> xs(n);
    for (double& v : xs)
        v = rng.normal(mean, sd);
    return xs;
}

} // namespace oracle
