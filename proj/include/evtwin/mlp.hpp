#pragma once

// Feed-forward network: logistic hidden units, linear scalar output,
// trained with mini-batch SGD on mean squared error. Parameters are
// exposed as a flat vector so tests can finite-difference the analytic
// gradients.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "evtwin/features.hpp"
#include "evtwin/rng.hpp"

namespace evtwin {

struct MlpParams {
    int hidden_layers = 7;
    int hidden_width = 64;
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

class MlpModel {
public:
    MlpModel() = default;

    // Zero-initialized network of the given shape.
    MlpModel(int input_dim, int hidden_layers, int hidden_width) {
        if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1)
            throw std::invalid_argument("invalid mlp shape");
        layer_sizes_.push_back(input_dim);
        for (int l = 0; l < hidden_layers; ++l) layer_sizes_.push_back(hidden_width);
        layer_sizes_.push_back(1);
        for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
            weights_.emplace_back(
                static_cast<std::size_t>(layer_sizes_[l + 1]) * static_cast<std::size_t>(layer_sizes_[l]),
                0.0);
            biases_.emplace_back(static_cast<std::size_t>(layer_sizes_[l + 1]), 0.0);
        }
    }

    static MlpModel fit(const Matrix& X, const std::vector<double>& y, const MlpParams& params) {
        if (X.empty() || X.size() != y.size()) throw std::invalid_argument("empty training data");
        if (params.epochs < 0 || params.batch_size < 1 || !(params.learning_rate > 0.0))
            throw std::invalid_argument("invalid mlp hyperparameters");
        check_finite(X);
        MlpModel m(static_cast<int>(X[0].size()), params.hidden_layers, params.hidden_width);
        Rng rng(mix_seed(params.seed, 0xA11CE));
        m.init_xavier(rng);

        const std::size_t n = X.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;

        std::vector<std::vector<double>> grad_w, grad_b;
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(params.batch_size)) {
                const std::size_t stop = std::min(n, start + static_cast<std::size_t>(params.batch_size));
                m.zero_like(grad_w, grad_b);
                double batch_loss = 0.0;
                for (std::size_t k = start; k < stop; ++k) {
                    batch_loss += m.backprop_accumulate(X[order[k]], y[order[k]], grad_w, grad_b);
                }
                const double inv = 1.0 / static_cast<double>(stop - start);
                batch_loss *= inv;
                if (!std::isfinite(batch_loss))
                    throw std::runtime_error("mlp training diverged (non-finite loss)");
                for (std::size_t l = 0; l < m.weights_.size(); ++l) {
                    for (std::size_t w = 0; w < m.weights_[l].size(); ++w)
                        m.weights_[l][w] -= params.learning_rate * inv * grad_w[l][w];
                    for (std::size_t b = 0; b < m.biases_[l].size(); ++b)
                        m.biases_[l][b] -= params.learning_rate * inv * grad_b[l][b];
                }
            }
        }
        return m;
    }

    double predict(const std::vector<double>& row) const {
        if (static_cast<int>(row.size()) != layer_sizes_.front())
            throw std::invalid_argument("feature dimension mismatch in mlp predict");
        std::vector<double> a = row;
        std::vector<double> next;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            forward_layer(l, a, next);
            if (l + 1 < weights_.size())
                for (double& v : next) v = sigmoid(v);
            a.swap(next);
        }
        return a[0];
    }

    // Mean squared error over the given set.
    double loss(const Matrix& X, const std::vector<double>& y) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            double e = predict(X[i]) - y[i];
            acc += e * e;
        }
        return acc / static_cast<double>(X.size());
    }

    // Analytic gradient of loss() with respect to the flat parameter vector.
    std::pair<double, std::vector<double>> loss_and_gradient(const Matrix& X,
                                                             const std::vector<double>& y) const {
        std::vector<std::vector<double>> grad_w, grad_b;
        zero_like(grad_w, grad_b);
        double total = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i)
            total += backprop_accumulate(X[i], y[i], grad_w, grad_b);
        const double inv = 1.0 / static_cast<double>(X.size());
        std::vector<double> flat;
        for (std::size_t l = 0; l < grad_w.size(); ++l) {
            for (double g : grad_w[l]) flat.push_back(g * inv);
            for (double g : grad_b[l]) flat.push_back(g * inv);
        }
        return {total * inv, flat};
    }

    std::vector<double> parameters() const {
        std::vector<double> flat;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            flat.insert(flat.end(), weights_[l].begin(), weights_[l].end());
            flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
        }
        return flat;
    }

    void set_parameters(const std::vector<double>& flat) {
        std::size_t pos = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (double& w : weights_[l]) w = flat.at(pos++);
            for (double& b : biases_[l]) b = flat.at(pos++);
        }
        if (pos != flat.size()) throw std::invalid_argument("parameter vector size mismatch");
    }

    const std::vector<int>& layer_sizes() const { return layer_sizes_; }

    nlohmann::json payload_json() const {
        return {{"layer_sizes", layer_sizes_}, {"weights", weights_}, {"biases", biases_}};
    }

    static MlpModel payload_from_json(const nlohmann::json& j, int n_features) {
        if (!j.is_object() || !j.contains("layer_sizes") || !j.contains("weights") ||
            !j.contains("biases"))
            throw std::runtime_error("mlp payload: expected layer_sizes/weights/biases");
        MlpModel m;
        m.layer_sizes_ = j.at("layer_sizes").get<std::vector<int>>();
        m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
        m.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
        if (m.layer_sizes_.size() < 2 || m.layer_sizes_.front() != n_features ||
            m.layer_sizes_.back() != 1 || m.weights_.size() != m.layer_sizes_.size() - 1 ||
            m.biases_.size() != m.weights_.size())
            throw std::runtime_error("mlp payload: inconsistent shape");
        for (std::size_t l = 0; l + 1 < m.layer_sizes_.size(); ++l) {
            const std::size_t rows = static_cast<std::size_t>(m.layer_sizes_[l + 1]);
            const std::size_t cols = static_cast<std::size_t>(m.layer_sizes_[l]);
            if (m.weights_[l].size() != rows * cols || m.biases_[l].size() != rows)
                throw std::runtime_error("mlp payload: matrix size mismatch");
        }
        return m;
    }

private:
    static double sigmoid(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        double e = std::exp(z);
        return e / (1.0 + e);
    }

    void init_xavier(Rng& rng) {
        for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
            const double limit =
                std::sqrt(6.0 / static_cast<double>(layer_sizes_[l] + layer_sizes_[l + 1]));
            for (double& w : weights_[l]) w = rng.uniform(-limit, limit);
            // biases stay zero
        }
    }

    void zero_like(std::vector<std::vector<double>>& grad_w,
                   std::vector<std::vector<double>>& grad_b) const {
        grad_w.resize(weights_.size());
        grad_b.resize(biases_.size());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            grad_w[l].assign(weights_[l].size(), 0.0);
            grad_b[l].assign(biases_[l].size(), 0.0);
        }
    }

    void forward_layer(std::size_t l, const std::vector<double>& in, std::vector<double>& out) const {
        const std::size_t rows = biases_[l].size();
        const std::size_t cols = in.size();
        out.assign(rows, 0.0);
        const double* w = weights_[l].data();
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = biases_[l][r];
            const double* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * in[c];
            out[r] = acc;
        }
    }

    // Returns the sample's squared error; adds d(error^2)/dparam into grads.
    double backprop_accumulate(const std::vector<double>& x, double target,
                               std::vector<std::vector<double>>& grad_w,
                               std::vector<std::vector<double>>& grad_b) const {
        const std::size_t n_layers = weights_.size();
        std::vector<std::vector<double>> activations(n_layers + 1);
        activations[0] = x;
        std::vector<double> z;
        for (std::size_t l = 0; l < n_layers; ++l) {
            forward_layer(l, activations[l], z);
            if (l + 1 < n_layers)
                for (double& v : z) v = sigmoid(v);
            activations[l + 1] = z;
        }
        const double pred = activations[n_layers][0];
        const double err = pred - target;

        std::vector<double> delta{2.0 * err};  // d(err^2)/d(pred)
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& a_in = activations[l];
            const std::size_t rows = biases_[l].size();
            const std::size_t cols = a_in.size();
            for (std::size_t r = 0; r < rows; ++r) {
                grad_b[l][r] += delta[r];
                double* gw = grad_w[l].data() + r * cols;
                for (std::size_t c = 0; c < cols; ++c) gw[c] += delta[r] * a_in[c];
            }
            if (l == 0) break;
            std::vector<double> prev(cols, 0.0);
            const double* w = weights_[l].data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* wr = w + r * cols;
                for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * delta[r];
            }
            // sigmoid derivative via the stored activation
            for (std::size_t c = 0; c < cols; ++c) prev[c] *= a_in[c] * (1.0 - a_in[c]);
            delta.swap(prev);
        }
        return err * err;
    }

    std::vector<int> layer_sizes_;
    std::vector<std::vector<double>> weights_;  // row-major, [out x in] per layer
    std::vector<std::vector<double>> biases_;
};

}  // namespace evtwin
