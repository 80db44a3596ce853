#include "zeroloss/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "zeroloss/errors.hpp"

namespace zeroloss {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

NetworkSpec::NetworkSpec(std::vector<std::size_t> widths, Activation act, bool with_output_bias)
    : dims(std::move(widths)), activation(act), output_bias(with_output_bias) {
    if (dims.size() < 2) {
        throw Error(ErrorKind::ValidationError, "network needs at least input and output widths");
    }
    for (std::size_t d : dims) {
        if (d == 0) throw Error(ErrorKind::ValidationError, "layer widths must be positive");
    }
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t k = 0;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        k += dims[l] * dims[l - 1] + dims[l];
    }
    if (!output_bias) k -= dims.back();
    return k;
}

NetworkParams NetworkParams::zeros(const NetworkSpec& spec) {
    NetworkParams p;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const auto rows = static_cast<Eigen::Index>(spec.dims[l + 1]);
        const auto cols = static_cast<Eigen::Index>(spec.dims[l]);
        p.weights.push_back(Matrix::Zero(rows, cols));
        p.biases.push_back(Vector::Zero(rows));
    }
    return p;
}

void check_shapes(const NetworkSpec& spec, const NetworkParams& params) {
    if (params.weights.size() != spec.layers() || params.biases.size() != spec.layers()) {
        throw Error(ErrorKind::ShapeError, "parameter layer count does not match spec");
    }
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const auto rows = static_cast<Eigen::Index>(spec.dims[l + 1]);
        const auto cols = static_cast<Eigen::Index>(spec.dims[l]);
        const Matrix& w = params.weights[l];
        if (w.rows() != rows || w.cols() != cols) {
            throw Error(ErrorKind::ShapeError, "W_" + std::to_string(l + 1) + " is " +
                                                   shape_str(w.rows(), w.cols()) + ", expected " +
                                                   shape_str(rows, cols));
        }
        if (params.biases[l].size() != rows) {
            throw Error(ErrorKind::ShapeError, "b_" + std::to_string(l + 1) + " has wrong length");
        }
    }
}

std::size_t weight_offset(const NetworkSpec& spec, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += spec.dims[l + 1] * spec.dims[l];
        if (spec.has_bias(l)) off += spec.dims[l + 1];
    }
    return off;
}

std::size_t bias_offset(const NetworkSpec& spec, std::size_t layer) {
    return weight_offset(spec, layer) + spec.dims[layer + 1] * spec.dims[layer];
}

Vector flatten(const NetworkSpec& spec, const NetworkParams& params) {
    check_shapes(spec, params);
    Vector theta(static_cast<Eigen::Index>(spec.parameter_count()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const Matrix& w = params.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) theta(k++) = w(i, j);
        }
        if (spec.has_bias(l)) {
            theta.segment(k, params.biases[l].size()) = params.biases[l];
            k += params.biases[l].size();
        }
    }
    return theta;
}

NetworkParams unflatten(const NetworkSpec& spec, const Vector& theta) {
    if (static_cast<std::size_t>(theta.size()) != spec.parameter_count()) {
        throw Error(ErrorKind::ShapeError, "theta has length " + std::to_string(theta.size()) +
                                               ", expected K = " +
                                               std::to_string(spec.parameter_count()));
    }
    NetworkParams p = NetworkParams::zeros(spec);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        Matrix& w = p.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = theta(k++);
        }
        if (spec.has_bias(l)) {
            p.biases[l] = theta.segment(k, p.biases[l].size());
            k += p.biases[l].size();
        }
    }
    return p;
}

ForwardTrace forward(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0) {
    check_shapes(spec, params);
    if (static_cast<std::size_t>(x0.rows()) != spec.input_dim()) {
        throw Error(ErrorKind::ShapeError, "input has " + std::to_string(x0.rows()) +
                                               " rows, network expects " +
                                               std::to_string(spec.input_dim()));
    }
    ForwardTrace trace;
    trace.layer_outputs.reserve(spec.layers() + 1);
    trace.pre_activations.reserve(spec.layers());
    trace.layer_outputs.push_back(x0);
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        Matrix z = params.weights[l] * trace.layer_outputs.back();
        if (spec.has_bias(l)) z.colwise() += params.biases[l];
        const bool output_layer = l + 1 == spec.layers();
        trace.layer_outputs.push_back(output_layer ? z : spec.activation.apply(z));
        trace.pre_activations.push_back(std::move(z));
    }
    return trace;
}

TrainingSet make_training_set(Matrix x0, Matrix outputs, std::vector<std::size_t> omega) {
    require_finite(x0, "training inputs");
    require_finite(outputs, "reference outputs");
    if (outputs.rows() != outputs.cols()) {
        throw Error(ErrorKind::ShapeError, "reference outputs must be Q x Q (one column per class)");
    }
    if (omega.size() != static_cast<std::size_t>(x0.cols())) {
        throw Error(ErrorKind::ShapeError, "label map length differs from sample count");
    }
    if (!numerical_rank(outputs).full_rank()) {
        throw Error(ErrorKind::PreconditionViolation, "reference outputs are not linearly independent");
    }
    TrainingSet ts;
    ts.y_omega.resize(outputs.rows(), x0.cols());
    for (std::size_t j = 0; j < omega.size(); ++j) {
        if (omega[j] >= static_cast<std::size_t>(outputs.cols())) {
            throw Error(ErrorKind::ShapeError, "label " + std::to_string(omega[j]) + " out of range");
        }
        ts.y_omega.col(static_cast<Eigen::Index>(j)) = outputs.col(static_cast<Eigen::Index>(omega[j]));
    }
    ts.x0 = std::move(x0);
    ts.outputs = std::move(outputs);
    ts.omega = std::move(omega);
    return ts;
}

double cost_of_output(const Matrix& output, const Matrix& y_omega) {
    if (output.rows() != y_omega.rows() || output.cols() != y_omega.cols()) {
        throw Error(ErrorKind::ShapeError, "network output " + shape_str(output.rows(), output.cols()) +
                                               " vs labels " + shape_str(y_omega.rows(), y_omega.cols()));
    }
    return (output - y_omega).squaredNorm() / (2.0 * static_cast<double>(output.cols()));
}

double cost(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts) {
    return cost_of_output(forward(spec, params, ts.x0).output(), ts.y_omega);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    // Fill column by column so that the draw order is independent of storage.
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
    }
    return a;
}

TrainingSet generate_generic_data(std::size_t m, std::size_t n, std::size_t q, std::uint64_t seed,
                                  double output_scale) {
    if (n == 0 || q == 0) {
        throw Error(ErrorKind::PreconditionViolation, "need N >= 1 and Q >= 1");
    }
    if (n >= m) {
        throw Error(ErrorKind::PreconditionViolation,
                    "strongly overparameterized data requires N < M (got M=" + std::to_string(m) +
                        ", N=" + std::to_string(n) + ")");
    }
    if (q > m) {
        throw Error(ErrorKind::PreconditionViolation, "need Q <= M");
    }
    if (!(output_scale != 0.0) || !std::isfinite(output_scale)) {
        throw Error(ErrorKind::PreconditionViolation, "output scale must be finite and nonzero");
    }

    std::uint64_t s = seed;
    Matrix x0 = gaussian_matrix(m, n, s);
    for (int attempt = 0; !numerical_rank(x0).full_rank(); ++attempt) {
        if (attempt == 100) {
            throw Error(ErrorKind::NumericalFailure, "could not draw full-rank Gaussian data");
        }
        x0 = gaussian_matrix(m, n, ++s);
    }

    std::vector<std::size_t> omega(n);
    for (std::size_t j = 0; j < n; ++j) omega[j] = j % q;
    const auto qi = static_cast<Eigen::Index>(q);
    TrainingSet ts = make_training_set(std::move(x0), output_scale * Matrix::Identity(qi, qi), std::move(omega));
    ts.seed_used = s;
    return ts;
}

Matrix generate_degenerate_data(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed) {
    if (r == 0) {
        throw Error(ErrorKind::PreconditionViolation, "degenerate data rank must be >= 1");
    }
    if (r >= std::min(m, n)) {
        throw Error(ErrorKind::PreconditionViolation, "degenerate data rank must be < min(M, N)");
    }
    const Matrix left = gaussian_matrix(m, r, seed);
    const Matrix right = gaussian_matrix(r, n, seed ^ 0x9e3779b97f4a7c15ULL);
    return left * right;
}

Matrix generate_duplicate_column_data(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw Error(ErrorKind::PreconditionViolation, "duplicate-column data needs N >= 2");
    }
    Matrix x = gaussian_matrix(m, n, seed);
    x.col(static_cast<Eigen::Index>(n) - 1) = x.col(0);
    return x;
}

}  // namespace zeroloss
