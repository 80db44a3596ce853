#include "zeroloss/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zeroloss/errors.hpp"

namespace zeroloss {

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
    if (a.rows() == 0 || a.cols() == 0) {
        throw Error(ErrorKind::InvalidMatrix, std::string(what) + ": empty matrix");
    }
    if (!a.allFinite()) {
        throw Error(ErrorKind::InvalidMatrix, std::string(what) + ": non-finite entries");
    }
}

RankResult numerical_rank(const Matrix& a, std::optional<double> tolerance) {
    require_finite(a, "numerical_rank");

    // Jacobi SVD is slower than BDC but relatively accurate for the small
    // singular values that decide rank.
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& sv = svd.singularValues();

    RankResult result;
    result.rows = static_cast<std::size_t>(a.rows());
    result.cols = static_cast<std::size_t>(a.cols());
    result.singular_values.assign(sv.data(), sv.data() + sv.size());

    const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    const double dim = static_cast<double>(std::max(a.rows(), a.cols()));
    result.tolerance = tolerance.value_or(dim * std::numeric_limits<double>::epsilon() * sigma_max);

    result.numerical_rank = static_cast<std::size_t>(
        std::count_if(result.singular_values.begin(), result.singular_values.end(),
                      [&](double s) { return s > result.tolerance; }));
    return result;
}

Matrix pseudo_solve(const Matrix& x, const Matrix& rhs) {
    require_finite(x, "pseudo_solve");
    require_finite(rhs, "pseudo_solve rhs");
    if (rhs.rows() != x.cols()) {
        throw Error(ErrorKind::ShapeError,
                    "pseudo_solve: rhs has " + std::to_string(rhs.rows()) + " rows, expected " +
                        std::to_string(x.cols()));
    }
    const auto rank = numerical_rank(x);
    if (x.cols() > x.rows() || rank.numerical_rank < static_cast<std::size_t>(x.cols())) {
        throw Error(ErrorKind::RankDeficient,
                    "pseudo_solve: X is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                        " with numerical rank " + std::to_string(rank.numerical_rank));
    }

    // X = Q R (thin). X^T W = R^T Q^T W = rhs, and the minimum-norm W lies in
    // range(Q): W = Q R^{-T} rhs.
    const Eigen::Index n = x.cols();
    Eigen::HouseholderQR<Matrix> qr(x);
    const Matrix r = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
    const Matrix z = r.transpose().triangularView<Eigen::Lower>().solve(rhs);
    const Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), n);
    return q * z;
}

Matrix bvtp(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::ShapeError, "bvtp: row counts differ (" + std::to_string(a.rows()) +
                                               " vs " + std::to_string(b.rows()) + ")");
    }
    const Eigen::Index n = a.rows();
    const Eigen::Index s = a.cols();
    const Eigen::Index t = b.cols();
    Matrix out(n, s * t);
    for (Eigen::Index alpha = 0; alpha < s; ++alpha) {
        out.middleCols(alpha * t, t) = b.array().colwise() * a.col(alpha).array();
    }
    return out;
}

}  // namespace zeroloss
