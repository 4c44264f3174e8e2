#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and
// an OpenMP version; the parallel versions produce results that do not
// depend on the thread count.

#include <cstddef>

#include "fsoqos/matrix.hpp"
#include "fsoqos/mlp.hpp"

namespace fsoqos::kernels {

// out = (1 / (m - 1)) X X^T for X of shape n x m.
Matrix covariance_serial(const Matrix& x);
Matrix covariance_parallel(const Matrix& x);

struct LossAndGradients {
    double loss = 0.0;
    mlp::Gradients grad;
};

// Batch-mean loss and its gradient. The serial version sums samples in
// order; the parallel version sums fixed-size chunks and reduces the
// chunk partials in chunk order.
LossAndGradients loss_and_gradients_serial(const mlp::MlpNetwork& net, const mlp::Batch& batch);
LossAndGradients loss_and_gradients_parallel(const mlp::MlpNetwork& net, const mlp::Batch& batch);

double batch_loss_serial(const mlp::MlpNetwork& net, const mlp::Batch& batch);
double batch_loss_parallel(const mlp::MlpNetwork& net, const mlp::Batch& batch);

inline constexpr std::size_t kSampleChunk = 64;

int max_threads();

} // namespace fsoqos::kernels
