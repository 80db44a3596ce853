#include <gtest/gtest.h>

#include "oracles.hpp"
#include "zeroloss/descent.hpp"
#include "zeroloss/errors.hpp"
#include "zeroloss/network.hpp"

using namespace zeroloss;

namespace {

NetworkParams random_params(const NetworkSpec& spec, std::uint64_t seed) {
    const Vector theta = gaussian_matrix(spec.parameter_count(), 1, seed, 0.7);
    return unflatten(spec, theta);
}

}  // namespace

TEST(NetworkSpec, ParameterCount) {
    EXPECT_EQ(NetworkSpec({2, 1}, Activation::identity()).parameter_count(), 3u);
    EXPECT_EQ(NetworkSpec({3, 3, 2}, Activation::tanh()).parameter_count(), 20u);
    EXPECT_EQ(NetworkSpec({3, 3, 2}, Activation::tanh(), false).parameter_count(), 18u);
    const NetworkSpec deep({8, 8, 8, 8, 2}, Activation::softplus());
    EXPECT_EQ(deep.parameter_count(), 3u * 72u + 18u);
    EXPECT_EQ(deep.hidden_layers(), 3u);
    EXPECT_EQ(deep.layers(), 4u);
}

TEST(NetworkSpec, RejectsBadWidths) {
    EXPECT_THROW(NetworkSpec({3}, Activation::tanh()), Error);
    EXPECT_THROW(NetworkSpec({3, 0, 1}, Activation::tanh()), Error);
}

TEST(Flatten, RoundTripAndOrder) {
    const NetworkSpec spec({3, 4, 2}, Activation::tanh());
    const NetworkParams p = random_params(spec, 3);
    const NetworkParams back = unflatten(spec, flatten(spec, p));
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        EXPECT_EQ(back.weights[l], p.weights[l]);
        EXPECT_EQ(back.biases[l], p.biases[l]);
    }
    const Vector theta = flatten(spec, p);
    EXPECT_EQ(theta(1), p.weights[0](0, 1));  // row-major
    EXPECT_EQ(theta(3), p.weights[0](1, 0));
    EXPECT_EQ(theta(static_cast<Eigen::Index>(bias_offset(spec, 0))), p.biases[0](0));
    EXPECT_EQ(weight_offset(spec, 1), 16u);
    EXPECT_THROW(unflatten(spec, Vector::Zero(5)), Error);
}

TEST(Flatten, WithoutOutputBias) {
    const NetworkSpec spec({3, 4, 2}, Activation::tanh(), false);
    NetworkParams p = random_params(spec, 4);
    EXPECT_EQ(p.biases.back(), Vector::Zero(2));
    EXPECT_EQ(flatten(spec, p).size(), 24);
    p.biases.back().setConstant(5.0);
    // The dropped bias is neither stored nor applied.
    EXPECT_EQ(forward(spec, p, Matrix::Ones(3, 2)).output(),
              forward(spec, unflatten(spec, flatten(spec, p)), Matrix::Ones(3, 2)).output());
}

TEST(Forward, SoftplusUnitExample) {
    const NetworkSpec spec({1, 1, 1}, Activation::softplus());
    NetworkParams p = NetworkParams::zeros(spec);
    p.weights[0](0, 0) = 1.0;
    p.weights[1](0, 0) = 1.0;
    const ForwardTrace t = forward(spec, p, Matrix::Zero(1, 1));
    EXPECT_NEAR(t.layer_outputs[1](0, 0), std::log(2.0), 1e-15);
    EXPECT_NEAR(t.output()(0, 0), std::log(2.0), 1e-15);
}

TEST(Forward, IdentityIsAffineComposition) {
    const NetworkSpec spec({3, 4, 5, 2}, Activation::identity());
    const NetworkParams p = random_params(spec, 9);
    const Matrix x = gaussian_matrix(3, 6, 10);
    Matrix expected = p.weights[2] * ((p.weights[1] * ((p.weights[0] * x).colwise() + p.biases[0])).colwise() + p.biases[1]);
    expected.colwise() += p.biases[2];
    EXPECT_LT(oracle::max_abs(forward(spec, p, x).output() - expected), 1e-12);
}

TEST(Forward, MatchesPerSampleOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::vector<Activation> acts{Activation::tanh(), Activation::softplus(), Activation::relu(),
                                           Activation::mollified_relu(0.1)};
        const NetworkSpec spec({4, 3 + seed % 3, 5, 2}, acts[seed % acts.size()], seed % 2 == 0);
        const NetworkParams p = random_params(spec, seed + 1);
        const Matrix x = gaussian_matrix(4, 7, seed + 77);
        const ForwardTrace t = forward(spec, p, x);
        EXPECT_LT(oracle::max_abs(t.output() - oracle::forward_columns(spec, p, x)), 1e-12);
        // Hidden outputs are the activation of the stored pre-activations.
        for (std::size_t l = 0; l + 1 < spec.layers(); ++l) {
            EXPECT_EQ(t.layer_outputs[l + 1], spec.activation.apply(t.pre_activations[l]));
        }
        EXPECT_EQ(t.output(), t.pre_activations.back());
    }
}

TEST(Forward, ShapeErrors) {
    const NetworkSpec spec({3, 2, 1}, Activation::tanh());
    NetworkParams p = NetworkParams::zeros(spec);
    EXPECT_THROW(forward(spec, p, Matrix::Zero(4, 2)), Error);
    p.weights[1] = Matrix::Zero(2, 2);
    try {
        forward(spec, p, Matrix::Zero(3, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
    }
}

TEST(Cost, Examples) {
    const NetworkSpec spec({1, 1}, Activation::identity());
    NetworkParams p = NetworkParams::zeros(spec);
    p.biases[0](0) = 3.0;
    Matrix y(1, 1);
    y << 1.0;
    const TrainingSet ts = make_training_set(Matrix::Zero(1, 1), y, {0});
    EXPECT_DOUBLE_EQ(cost(spec, p, ts), 2.0);
    p.biases[0](0) = 1.0;
    EXPECT_EQ(cost(spec, p, ts), 0.0);
}

TEST(Cost, MatchesNaiveSum) {
    const TrainingSet ts = generate_generic_data(6, 4, 2, 5);
    const NetworkSpec spec({6, 5, 2}, Activation::softplus());
    const NetworkParams p = random_params(spec, 8);
    const double c = cost(spec, p, ts);
    EXPECT_NEAR(c, oracle::naive_cost(spec, p, ts), 1e-12 * std::max(1.0, c));
}

TEST(TrainingSet, Validation) {
    Matrix dependent(2, 2);
    dependent << 1, 2, 2, 4;
    try {
        make_training_set(Matrix::Ones(3, 2), dependent, {0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolation);
    }
    EXPECT_THROW(make_training_set(Matrix::Ones(3, 2), Matrix::Identity(2, 2), {0, 2}), Error);
    EXPECT_THROW(make_training_set(Matrix::Ones(3, 2), Matrix::Identity(2, 2), {0}), Error);
    Matrix bad = Matrix::Ones(3, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(make_training_set(bad, Matrix::Identity(2, 2), {0, 1}), Error);
}

TEST(GenerateData, Generic) {
    const TrainingSet ts = generate_generic_data(8, 5, 2, 1);
    EXPECT_EQ(numerical_rank(ts.x0).numerical_rank, 5u);
    EXPECT_EQ(oracle::elimination_rank(ts.x0), 5u);
    EXPECT_EQ(ts.outputs, Matrix::Identity(2, 2));
    EXPECT_EQ(numerical_rank(ts.outputs).numerical_rank, 2u);
    for (std::size_t j = 0; j < ts.samples(); ++j) {
        EXPECT_EQ(ts.y_omega.col(static_cast<Eigen::Index>(j)), ts.outputs.col(static_cast<Eigen::Index>(ts.omega[j])));
    }
    // Deterministic in the seed.
    EXPECT_EQ(generate_generic_data(8, 5, 2, 1).x0, ts.x0);
    EXPECT_NE(generate_generic_data(8, 5, 2, 2).x0, ts.x0);
}

TEST(GenerateData, GenericPreconditions) {
    try {
        generate_generic_data(3, 3, 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolation);
    }
    EXPECT_THROW(generate_generic_data(3, 2, 4, 1), Error);
    EXPECT_THROW(generate_generic_data(3, 2, 0, 1), Error);
}

TEST(GenerateData, Degenerate) {
    const Matrix x = generate_degenerate_data(6, 4, 2, 3);
    EXPECT_EQ(numerical_rank(x).numerical_rank, 2u);
    EXPECT_EQ(oracle::elimination_rank(x, 1e-9), 2u);
    EXPECT_THROW(generate_degenerate_data(6, 4, 0, 3), Error);
    EXPECT_THROW(generate_degenerate_data(6, 4, 4, 3), Error);
    const Matrix dup = generate_duplicate_column_data(6, 4, 3);
    EXPECT_EQ(numerical_rank(dup).numerical_rank, 3u);
}
