#ifndef B2E_MLP_HPP
#define B2E_MLP_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace b2e {

/// Feed-forward network with tanh hidden layers and a linear last layer,
/// one output per action. Critic heads apply a pointwise sigmoid on top.
/// Parameters live in one flat vector; layer weights are mapped views into
/// it, so optimizers and checkpoints see a single array.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    std::uint64_t seed() const { return seed_; }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    /// Batch forward pass: rows are samples. Returns raw (pre-sigmoid) logits.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
    Eigen::VectorXd forward_one(const Eigen::VectorXd& input) const;

    /// Gradient of a per-sample loss given d(loss)/d(logit) for the taken
    /// action of each sample (zero for all other outputs).
    /// `actions[k]` selects the output coordinate of sample k.
    Eigen::VectorXd backward_taken_action(const Eigen::MatrixXd& inputs,
                                          const std::vector<int>& actions,
                                          const Eigen::VectorXd& dloss_dlogit) const;

    void save(std::ostream& out, const std::string& algo_tag) const;
    static Mlp load(std::istream& in, std::string* algo_tag = nullptr);

private:
    std::vector<int> sizes_;
    std::uint64_t seed_ = 0;
    Eigen::VectorXd params_;

    struct LayerView {
        Eigen::Map<const Eigen::MatrixXd> W;  // out x in
        Eigen::Map<const Eigen::VectorXd> b;  // out
    };
    LayerView layer(int l) const;
    int layer_offset(int l) const;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Sigmoid outputs for a batch of logits.
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& logits);

/// Mean binary cross-entropy over a batch, with log arguments clamped at
/// 1e-7. `p` holds sigmoid outputs for the taken action of each sample.
double bce_loss(const Eigen::VectorXd& p, const Eigen::VectorXd& labels);

/// d(mean BCE)/d(logit) per sample, consistent with the clamped loss.
Eigen::VectorXd bce_dlogit(const Eigen::VectorXd& p, const Eigen::VectorXd& labels);

constexpr double kBceClamp = 1e-7;

struct AdamState {
    Eigen::VectorXd m;  // first moments
    Eigen::VectorXd v;  // second moments
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index dim)
        : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)) {}
};

/// Standard Adam update with bias correction, in place.
void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads, double lr);

/// Learning-rate schedule (1-p)*1e-4 + p*1e-6, p = training progress in [0,1].
inline double lr_schedule(double progress) {
    return (1.0 - progress) * 1e-4 + progress * 1e-6;
}

}  // namespace b2e

#endif
