#include "b2e/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace b2e {

namespace {
int param_count(const std::vector<int>& sizes) {
    int total = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l)
        total += sizes[l] * sizes[l - 1] + sizes[l];
    return total;
}
}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), seed_(seed) {
    if (sizes_.size() < 2)
        throw std::invalid_argument("mlp: need at least input and output layers");
    for (int s : sizes_)
        if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
    params_.resize(param_count(sizes_));
    std::mt19937_64 rng(seed);
    int offset = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const int fan_in = sizes_[l - 1];
        const double bound = 1.0 / std::sqrt(double(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        const int count = sizes_[l] * fan_in + sizes_[l];
        for (int k = 0; k < count; ++k) params_[offset + k] = dist(rng);
        offset += count;
    }
}

int Mlp::layer_offset(int l) const {
    int offset = 0;
    for (int k = 1; k < l; ++k)
        offset += sizes_[k] * sizes_[k - 1] + sizes_[k];
    return offset;
}

Mlp::LayerView Mlp::layer(int l) const {
    const int offset = layer_offset(l);
    const int rows = sizes_[l];
    const int cols = sizes_[l - 1];
    return {Eigen::Map<const Eigen::MatrixXd>(params_.data() + offset, rows, cols),
            Eigen::Map<const Eigen::VectorXd>(params_.data() + offset + rows * cols,
                                              rows)};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
    if (inputs.cols() != input_dim())
        throw std::invalid_argument("mlp: observation dimension mismatch");
    Eigen::MatrixXd h = inputs;
    const int last = static_cast<int>(sizes_.size()) - 1;
    for (int l = 1; l <= last; ++l) {
        const LayerView lv = layer(l);
        Eigen::MatrixXd z = h * lv.W.transpose();
        z.rowwise() += lv.b.transpose();
        if (l < last)
            h = z.array().tanh().matrix();
        else
            h = std::move(z);
    }
    return h;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& input) const {
    return forward(input.transpose()).row(0);
}

Eigen::VectorXd Mlp::backward_taken_action(
    const Eigen::MatrixXd& inputs, const std::vector<int>& actions,
    const Eigen::VectorXd& dloss_dlogit) const {
    const int last = static_cast<int>(sizes_.size()) - 1;
    const Eigen::Index batch = inputs.rows();
    if (static_cast<Eigen::Index>(actions.size()) != batch ||
        dloss_dlogit.size() != batch)
        throw std::invalid_argument("mlp: batch size mismatch in backward");

    std::vector<Eigen::MatrixXd> activations(last + 1);
    activations[0] = inputs;
    for (int l = 1; l <= last; ++l) {
        const LayerView lv = layer(l);
        Eigen::MatrixXd z = activations[l - 1] * lv.W.transpose();
        z.rowwise() += lv.b.transpose();
        activations[l] = (l < last) ? z.array().tanh().matrix() : std::move(z);
    }

    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(batch, sizes_[last]);
    for (Eigen::Index k = 0; k < batch; ++k)
        delta(k, actions[k]) = dloss_dlogit[k];

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    for (int l = last; l >= 1; --l) {
        const LayerView lv = layer(l);
        const int offset = layer_offset(l);
        const int rows = sizes_[l];
        const int cols = sizes_[l - 1];
        Eigen::Map<Eigen::MatrixXd>(grad.data() + offset, rows, cols) =
            delta.transpose() * activations[l - 1];
        Eigen::Map<Eigen::VectorXd>(grad.data() + offset + rows * cols, rows) =
            delta.colwise().sum();
        if (l > 1) {
            const Eigen::MatrixXd dh = delta * lv.W;
            delta = dh.array() *
                    (1.0 - activations[l - 1].array().square());
        }
    }
    return grad;
}

void Mlp::save(std::ostream& out, const std::string& algo_tag) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["algo"] = algo_tag;
    j["layer_sizes"] = sizes_;
    j["seed"] = seed_;
    std::vector<double> flat(params_.data(), params_.data() + params_.size());
    j["params"] = flat;
    out << j.dump() << "\n";
}

Mlp Mlp::load(std::istream& in, std::string* algo_tag) {
    nlohmann::json j;
    in >> j;
    Mlp net;
    net.sizes_ = j.at("layer_sizes").get<std::vector<int>>();
    net.seed_ = j.at("seed").get<std::uint64_t>();
    const auto flat = j.at("params").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != param_count(net.sizes_))
        throw std::runtime_error("mlp checkpoint: parameter count mismatch");
    net.params_ = Eigen::Map<const Eigen::VectorXd>(
        flat.data(), static_cast<Eigen::Index>(flat.size()));
    if (algo_tag) *algo_tag = j.value("algo", std::string{});
    return net;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& logits) {
    return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

double bce_loss(const Eigen::VectorXd& p, const Eigen::VectorXd& labels) {
    if (p.size() == 0) throw std::invalid_argument("bce_loss: empty batch");
    double total = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double y = labels[k];
        total -= y * std::log(std::max(p[k], kBceClamp)) +
                 (1.0 - y) * std::log(std::max(1.0 - p[k], kBceClamp));
    }
    return total / double(p.size());
}

Eigen::VectorXd bce_dlogit(const Eigen::VectorXd& p,
                           const Eigen::VectorXd& labels) {
    const double inv_batch = 1.0 / double(p.size());
    Eigen::VectorXd d(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double pk = p[k];
        const double y = labels[k];
        // Gradient of the clamped loss: terms inside the clamp region
        // contribute zero.
        double dp = 0.0;
        if (pk > kBceClamp) dp -= y / pk;
        if (1.0 - pk > kBceClamp) dp += (1.0 - y) / (1.0 - pk);
        d[k] = dp * pk * (1.0 - pk) * inv_batch;
    }
    return d;
}

void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v.array().matrix() +
              (1.0 - state.beta2) * grads.array().square().matrix();
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    params.array() -= lr * (state.m.array() / bc1) /
                      ((state.v.array() / bc2).sqrt() + state.eps);
}

}  // namespace b2e
