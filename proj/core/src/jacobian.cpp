#include "zeroloss/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zeroloss/errors.hpp"

namespace zeroloss {

Matrix jacobian_matrix(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0) {
    const ForwardTrace trace = forward(spec, params, x0);
    const auto n = x0.cols();
    const auto q = static_cast<Eigen::Index>(spec.output_dim());
    Matrix d = Matrix::Zero(n * q, static_cast<Eigen::Index>(spec.parameter_count()));

    for (Eigen::Index j = 0; j < n; ++j) {
        // g(r, a): derivative of output r with respect to pre-activation a of
        // the current layer.
        Matrix g = Matrix::Identity(q, q);
        for (std::size_t l = spec.layers(); l-- > 0;) {
            const auto x_prev = trace.layer_outputs[l].col(j);
            const auto rows = static_cast<Eigen::Index>(spec.dims[l + 1]);
            const auto cols = static_cast<Eigen::Index>(spec.dims[l]);
            const auto woff = static_cast<Eigen::Index>(weight_offset(spec, l));
            for (Eigen::Index a = 0; a < rows; ++a) {
                d.block(j * q, woff + a * cols, q, cols) = g.col(a) * x_prev.transpose();
            }
            if (spec.has_bias(l)) {
                d.block(j * q, static_cast<Eigen::Index>(bias_offset(spec, l)), q, rows) = g;
            }
            if (l > 0) {
                const Vector dsigma = spec.activation.apply_deriv(trace.pre_activations[l - 1].col(j));
                g = (g * params.weights[l]) * dsigma.asDiagonal();
            }
        }
    }
    return d;
}

JacobianReport jacobian_analytic(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0,
                                 std::optional<double> rank_tolerance) {
    JacobianReport report;
    report.d = jacobian_matrix(spec, params, x0);
    report.rank = numerical_rank(report.d, rank_tolerance);
    report.samples = static_cast<std::size_t>(x0.cols());
    report.outputs = spec.output_dim();
    report.parameters = spec.parameter_count();
    return report;
}

namespace {

Matrix flat_output(const ForwardTrace& trace) {
    // Output is Q x N column-major, so its raw storage is already sample-major.
    const Matrix& out = trace.output();
    return Eigen::Map<const Vector>(out.data(), out.size());
}

bool sign_pattern_differs(const ForwardTrace& a, const ForwardTrace& b, std::size_t hidden) {
    for (std::size_t l = 0; l < hidden; ++l) {
        const Matrix& za = a.pre_activations[l];
        const Matrix& zb = b.pre_activations[l];
        for (Eigen::Index i = 0; i < za.size(); ++i) {
            if ((za.data()[i] > 0.0) != (zb.data()[i] > 0.0)) return true;
        }
    }
    return false;
}

}  // namespace

FdJacobian jacobian_fd(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::ValidationError, "finite-difference step must be positive");
    const Vector theta = flatten(spec, params);
    const bool check_kinks = !spec.activation.flags().has_lipschitz_deriv;
    const std::size_t hidden = spec.hidden_layers();

    FdJacobian result;
    const ForwardTrace base = forward(spec, params, x0);
    result.d.resize(base.output().size(), theta.size());
    if (check_kinks) {
        for (std::size_t l = 0; l < hidden && !result.near_kink; ++l) {
            result.near_kink = (base.pre_activations[l].array() == 0.0).any();
        }
    }

    Vector probe = theta;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        probe(k) = theta(k) + h;
        const ForwardTrace plus = forward(spec, unflatten(spec, probe), x0);
        probe(k) = theta(k) - h;
        const ForwardTrace minus = forward(spec, unflatten(spec, probe), x0);
        probe(k) = theta(k);

        result.d.col(k) = (flat_output(plus) - flat_output(minus)) / (2.0 * h);
        if (check_kinks &&
            (sign_pattern_differs(plus, base, hidden) || sign_pattern_differs(minus, base, hidden))) {
            result.near_kink = true;
            ++result.kink_columns;
        }
    }
    return result;
}

double WeightedActivationSum::value(const Vector& z) const {
    double s = 0.0;
    for (Eigen::Index m = 0; m < z.size(); ++m) s += weights_(m) * act_.eval(z(m));
    return s;
}

Vector WeightedActivationSum::gradient(const Vector& z) const {
    Vector g(z.size());
    for (Eigen::Index m = 0; m < z.size(); ++m) g(m) = weights_(m) * act_.deriv(z(m));
    return g;
}

Matrix gradient_rows(const ScalarField& field, const Matrix& points) {
    Matrix g(points.rows(), points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        g.row(i) = field.gradient(points.row(i).transpose()).transpose();
    }
    return g;
}

Matrix jacobian_fixed_nonlinearity(const ScalarField& field, const Matrix& w, const Vector& b,
                                   const Matrix& x, bool with_bias) {
    if (w.cols() != x.rows() || w.rows() != b.size() ||
        static_cast<std::size_t>(w.rows()) != field.dim()) {
        throw Error(ErrorKind::ShapeError, "fixed-nonlinearity model: inconsistent W, b, X or field dimension");
    }
    Matrix ax = (w * x).transpose();  // row i = A(X_i)
    ax.rowwise() += b.transpose();
    const Matrix grads = gradient_rows(field, ax);
    const Matrix weight_block = bvtp(grads, x.transpose());
    if (!with_bias) return weight_block;
    Matrix d(weight_block.rows(), weight_block.cols() + grads.cols());
    d << weight_block, grads;
    return d;
}

Matrix jacobian_two_layer(const Vector& w, const Matrix& weights, const Vector& b, const Matrix& x,
                          const Activation& act) {
    if (weights.rows() != w.size() || weights.rows() != b.size() || weights.cols() != x.rows()) {
        throw Error(ErrorKind::ShapeError, "two-layer model: inconsistent w, W, b or X");
    }
    Matrix z = weights * x;
    z.colwise() += b;
    // Row j of g is w_i * d sigma^i at W x_j + b.
    const Matrix g = (act.apply_deriv(z).array().colwise() * w.array()).matrix().transpose();
    const Matrix hidden = act.apply(z).transpose();
    const Matrix weight_block = bvtp(g, x.transpose());

    Matrix d(x.cols(), hidden.cols() + weight_block.cols() + g.cols());
    d << hidden, weight_block, g;
    return d;
}

RankDiagnosis rank_along_condition(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0,
                                   std::optional<double> rank_tolerance) {
    RankDiagnosis diag;
    const ForwardTrace trace = forward(spec, params, x0);

    diag.x0_full_rank = static_cast<Eigen::Index>(numerical_rank(x0).numerical_rank) == x0.cols();
    if (!diag.x0_full_rank) diag.violated.emplace_back("X0 not of full column rank");

    // Full rank here means surjective (rank = rows), which is what makes each
    // layer map a submersion; for square hidden layers it is ordinary full rank.
    for (std::size_t l = 1; l < spec.layers(); ++l) {
        const Matrix& w = params.weights[l];
        const bool ok = static_cast<Eigen::Index>(numerical_rank(w).numerical_rank) == w.rows();
        diag.weights_full_rank.push_back(ok);
        if (!ok) diag.violated.push_back("W_" + std::to_string(l + 1) + " not full rank");
    }

    double min_abs = 1.0;
    for (std::size_t l = 0; l < spec.hidden_layers(); ++l) {
        const Matrix dz = spec.activation.apply_deriv(trace.pre_activations[l]).cwiseAbs();
        min_abs = std::min(min_abs, dz.minCoeff());
    }
    diag.min_abs_sigma_prime = min_abs;
    diag.derivative_nonvanishing = min_abs > 0.0;
    if (!diag.derivative_nonvanishing) diag.violated.emplace_back("activation derivative vanishes on the trace");

    diag.sufficient_condition_met = diag.violated.empty();

    const Matrix d = jacobian_matrix(spec, params, x0);
    diag.jacobian_rank = numerical_rank(d, rank_tolerance);
    diag.expected_rank = diag.jacobian_rank.max_rank();
    diag.d_full_rank = diag.jacobian_rank.full_rank();
    diag.consistent = !diag.sufficient_condition_met || diag.d_full_rank;
    return diag;
}

}  // namespace zeroloss
