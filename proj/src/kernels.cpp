#include "fsoqos/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsoqos::kernels {

namespace {

void check_covariance_input(const Matrix& x)
{
    if (x.cols() < 2) {
        throw ShapeError("covariance needs at least two observations");
    }
}

double scaled_row_dot(const Matrix& x, std::size_t i, std::size_t j, double inv)
{
    const auto a = x.row(i);
    const auto b = x.row(j);
    double sum = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        sum += a[c] * b[c];
    }
    return sum * inv;
}

struct Scratch {
    std::vector<double> hidden_pre;
    std::vector<double> hidden;
    std::vector<double> output_delta;

    explicit Scratch(const mlp::MlpNetwork& net)
        : hidden_pre(net.sizes.hidden), hidden(net.sizes.hidden), output_delta(net.sizes.outputs) {}
};

// Adds one sample's unnormalised loss and gradient to `acc`.
double accumulate_sample(const mlp::MlpNetwork& net,
                         std::span<const double> x,
                         std::span<const double> y,
                         mlp::Gradients& acc,
                         Scratch& s)
{
    const std::size_t ni = net.sizes.inputs;
    const std::size_t nh = net.sizes.hidden;
    const std::size_t no = net.sizes.outputs;

    for (std::size_t j = 0; j < nh; ++j) {
        double z = net.bias_hidden[j];
        for (std::size_t i = 0; i < ni; ++i) {
            z += x[i] * net.weights_input_hidden(i, j);
        }
        s.hidden_pre[j] = z;
        s.hidden[j] = mlp::activate(net.activation_hidden, z);
    }

    double sample_loss = 0.0;
    for (std::size_t n = 0; n < no; ++n) {
        double z = net.bias_output[n];
        for (std::size_t j = 0; j < nh; ++j) {
            z += s.hidden[j] * net.weights_hidden_output(j, n);
        }
        const double err = mlp::activate(net.activation_output, z) - y[n];
        sample_loss += 0.5 * err * err;
        s.output_delta[n] = err * mlp::activate_derivative(net.activation_output, z);
    }

    for (std::size_t j = 0; j < nh; ++j) {
        double back = 0.0;
        for (std::size_t n = 0; n < no; ++n) {
            acc.weights_hidden_output(j, n) += s.hidden[j] * s.output_delta[n];
            back += net.weights_hidden_output(j, n) * s.output_delta[n];
        }
        const double hidden_delta = back * mlp::activate_derivative(net.activation_hidden, s.hidden_pre[j]);
        acc.bias_hidden[j] += hidden_delta;
        for (std::size_t i = 0; i < ni; ++i) {
            acc.weights_input_hidden(i, j) += x[i] * hidden_delta;
        }
    }
    for (std::size_t n = 0; n < no; ++n) {
        acc.bias_output[n] += s.output_delta[n];
    }
    return sample_loss;
}

double sample_loss_only(const mlp::MlpNetwork& net, std::span<const double> x, std::span<const double> y, Scratch& s)
{
    double sample_loss = 0.0;
    for (std::size_t j = 0; j < net.sizes.hidden; ++j) {
        double z = net.bias_hidden[j];
        for (std::size_t i = 0; i < net.sizes.inputs; ++i) {
            z += x[i] * net.weights_input_hidden(i, j);
        }
        s.hidden[j] = mlp::activate(net.activation_hidden, z);
    }
    for (std::size_t n = 0; n < net.sizes.outputs; ++n) {
        double z = net.bias_output[n];
        for (std::size_t j = 0; j < net.sizes.hidden; ++j) {
            z += s.hidden[j] * net.weights_hidden_output(j, n);
        }
        const double err = mlp::activate(net.activation_output, z) - y[n];
        sample_loss += 0.5 * err * err;
    }
    return sample_loss;
}

void add_into(mlp::Gradients& dst, const mlp::Gradients& src)
{
    auto add = [](std::span<double> d, std::span<const double> s) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += s[i];
        }
    };
    add(dst.weights_input_hidden.data(), src.weights_input_hidden.data());
    add(dst.bias_hidden, src.bias_hidden);
    add(dst.weights_hidden_output.data(), src.weights_hidden_output.data());
    add(dst.bias_output, src.bias_output);
}

void scale(mlp::Gradients& g, double factor)
{
    for (double& v : g.weights_input_hidden.data()) v *= factor;
    for (double& v : g.bias_hidden) v *= factor;
    for (double& v : g.weights_hidden_output.data()) v *= factor;
    for (double& v : g.bias_output) v *= factor;
}

std::size_t chunk_count(std::size_t samples) { return (samples + kSampleChunk - 1) / kSampleChunk; }

} // namespace

Matrix covariance_serial(const Matrix& x)
{
    check_covariance_input(x);
    const std::size_t n = x.rows();
    const double inv = 1.0 / static_cast<double>(x.cols() - 1);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            out(i, j) = out(j, i) = scaled_row_dot(x, i, j, inv);
        }
    }
    return out;
}

Matrix covariance_parallel(const Matrix& x)
{
    check_covariance_input(x);
    const std::size_t n = x.rows();
    const double inv = 1.0 / static_cast<double>(x.cols() - 1);
    Matrix out(n, n);
    const auto cells = static_cast<long long>(n * n);
#pragma omp parallel for schedule(dynamic, 4)
    for (long long idx = 0; idx < cells; ++idx) {
        const auto i = static_cast<std::size_t>(idx) / n;
        const auto j = static_cast<std::size_t>(idx) % n;
        if (j >= i) {
            out(i, j) = out(j, i) = scaled_row_dot(x, i, j, inv);
        }
    }
    return out;
}

LossAndGradients loss_and_gradients_serial(const mlp::MlpNetwork& net, const mlp::Batch& batch)
{
    mlp::check_batch(net, batch);
    LossAndGradients out{0.0, mlp::Gradients::zeros_like(net)};
    Scratch scratch(net);
    for (std::size_t s = 0; s < batch.size(); ++s) {
        out.loss += accumulate_sample(net, batch.inputs.row(s), batch.targets.row(s), out.grad, scratch);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    scale(out.grad, inv);
    return out;
}

LossAndGradients loss_and_gradients_parallel(const mlp::MlpNetwork& net, const mlp::Batch& batch)
{
    mlp::check_batch(net, batch);
    const std::size_t samples = batch.size();
    const std::size_t chunks = chunk_count(samples);
    std::vector<LossAndGradients> partial(chunks, LossAndGradients{0.0, mlp::Gradients::zeros_like(net)});

#pragma omp parallel
    {
        Scratch scratch(net);
#pragma omp for schedule(static)
        for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
            auto& part = partial[static_cast<std::size_t>(c)];
            const std::size_t begin = static_cast<std::size_t>(c) * kSampleChunk;
            const std::size_t end = std::min(samples, begin + kSampleChunk);
            for (std::size_t s = begin; s < end; ++s) {
                part.loss += accumulate_sample(net, batch.inputs.row(s), batch.targets.row(s), part.grad, scratch);
            }
        }
    }

    LossAndGradients out{0.0, mlp::Gradients::zeros_like(net)};
    for (const auto& part : partial) {
        out.loss += part.loss;
        add_into(out.grad, part.grad);
    }
    const double inv = 1.0 / static_cast<double>(samples);
    out.loss *= inv;
    scale(out.grad, inv);
    return out;
}

double batch_loss_serial(const mlp::MlpNetwork& net, const mlp::Batch& batch)
{
    mlp::check_batch(net, batch);
    Scratch scratch(net);
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        total += sample_loss_only(net, batch.inputs.row(s), batch.targets.row(s), scratch);
    }
    return total / static_cast<double>(batch.size());
}

double batch_loss_parallel(const mlp::MlpNetwork& net, const mlp::Batch& batch)
{
    mlp::check_batch(net, batch);
    const std::size_t samples = batch.size();
    const std::size_t chunks = chunk_count(samples);
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel
    {
        Scratch scratch(net);
#pragma omp for schedule(static)
        for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
            const std::size_t begin = static_cast<std::size_t>(c) * kSampleChunk;
            const std::size_t end = std::min(samples, begin + kSampleChunk);
            double sum = 0.0;
            for (std::size_t s = begin; s < end; ++s) {
                sum += sample_loss_only(net, batch.inputs.row(s), batch.targets.row(s), scratch);
            }
            partial[static_cast<std::size_t>(c)] = sum;
        }
    }
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total / static_cast<double>(samples);
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace fsoqos::kernels
