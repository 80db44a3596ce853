#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "zeroloss/activations.hpp"
#include "zeroloss/linalg.hpp"

namespace zeroloss {

// Layer widths [M_0, M_1, ..., M_L, Q]. Hidden layers apply the activation;
// the output layer is affine. With output_bias == false the last bias is
// dropped from the parameter vector, which gives the bias-free two-layer and
// linear-regression models used in the rank examples.
struct NetworkSpec {
    std::vector<std::size_t> dims;
    Activation activation = Activation::softplus();
    bool output_bias = true;

    NetworkSpec() = default;
    NetworkSpec(std::vector<std::size_t> widths, Activation act, bool with_output_bias = true);

    std::size_t hidden_layers() const { return dims.size() - 2; }
    std::size_t layers() const { return dims.size() - 1; }  // L + 1
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    // Sum over layers of M_l * M_{l-1} + M_l (minus Q without output bias).
    std::size_t parameter_count() const;
    bool has_bias(std::size_t layer) const { return output_bias || layer + 1 < layers(); }
};

// weights[l] is M_{l+1} x M_l, biases[l] has M_{l+1} entries (0-based layers).
// Without output bias, biases.back() is kept as a zero vector so that shapes
// stay uniform; it is excluded from flatten().
struct NetworkParams {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static NetworkParams zeros(const NetworkSpec& spec);
};

void check_shapes(const NetworkSpec& spec, const NetworkParams& params);

// Canonical order: layer-ascending; within a layer W row-major, then b.
Vector flatten(const NetworkSpec& spec, const NetworkParams& params);
NetworkParams unflatten(const NetworkSpec& spec, const Vector& theta);

// Column offset of layer l's weight block in the flattened vector, and of its
// bias block.
std::size_t weight_offset(const NetworkSpec& spec, std::size_t layer);
std::size_t bias_offset(const NetworkSpec& spec, std::size_t layer);

struct ForwardTrace {
    std::vector<Matrix> layer_outputs;   // X^(0) .. X^(L+1)
    std::vector<Matrix> pre_activations; // Z^(1) .. Z^(L+1)

    const Matrix& output() const { return layer_outputs.back(); }
};

ForwardTrace forward(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0);

struct TrainingSet {
    Matrix x0;                     // M x N, samples are columns
    Matrix outputs;                // Q x Q, column l is y_l
    std::vector<std::size_t> omega;  // 0-based label of each sample
    Matrix y_omega;                // Q x N, column j = y_{omega(j)}
    std::uint64_t seed_used = 0;

    std::size_t samples() const { return static_cast<std::size_t>(x0.cols()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(x0.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(outputs.rows()); }
};

// Assembles Y_omega and validates that outputs are linearly independent.
TrainingSet make_training_set(Matrix x0, Matrix outputs, std::vector<std::size_t> omega);

// (2N)^{-1} * sum_j |x_j[theta] - y_omega(j)|^2
double cost(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts);
double cost_of_output(const Matrix& output, const Matrix& y_omega);

// Gaussian inputs, outputs = output_scale * standard basis, omega(j) = j mod Q.
// Requires N < M and Q <= M. A rank-deficient draw is redrawn with seed + 1
// (recorded in seed_used).
TrainingSet generate_generic_data(std::size_t m, std::size_t n, std::size_t q, std::uint64_t seed,
                                  double output_scale = 1.0);

// M x N product of seeded M x r and r x N Gaussian factors; 1 <= r < min(M, N).
Matrix generate_degenerate_data(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed);

// Gaussian M x N data whose last column repeats the first (rank N - 1).
Matrix generate_duplicate_column_data(std::size_t m, std::size_t n, std::uint64_t seed);

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0);

}  // namespace zeroloss
