#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fennm {

enum class Activation { Tanh, Sin };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct NetConfig {
    int layers = 2;  // hidden layers
    int width = 20;  // neurons per hidden layer
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
};

inline constexpr int kMaxJetOrder = 3;

/// Network output and its input derivatives at a batch of points.
/// `d[j]` holds d^j u / dx^j; orders above `max_order` are empty.
template <typename Scalar>
struct JetBatch {
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Array points;
    std::array<Array, kMaxJetOrder + 1> d;
    int max_order = 0;

    Eigen::Index size() const { return points.size(); }
    const Array& value() const { return d[0]; }

    /// Zero-filled batch with the same points and orders.
    JetBatch zeros_like() const
    {
        JetBatch out;
        out.points = points;
        out.max_order = max_order;
        for (int j = 0; j <= max_order; ++j) {
            out.d[j] = Array::Zero(points.size());
        }
        return out;
    }
};

namespace detail {

// sigma^(j)(z) for j = 0..count-1, evaluated elementwise.
template <typename Scalar>
void activation_derivatives(Activation act,
                            const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>& z, int count,
                            std::array<Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>, 5>& s)
{
    if (act == Activation::Tanh) {
        s[0] = z.tanh();
        if (count > 1) {
            const auto& t = s[0];
            const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> sech2 = 1 - t.square();
            if (count > 2) {
                s[2] = -2 * t * sech2;
            }
            if (count > 3) {
                s[3] = sech2 * (6 * t.square() - 2);
            }
            if (count > 4) {
                s[4] = 8 * t * sech2 * (2 - 3 * t.square());
            }
            s[1] = sech2;
        }
        return;
    }
    s[0] = z.sin();
    if (count > 1) {
        s[1] = z.cos();
    }
    if (count > 2) {
        s[2] = -s[0];
    }
    if (count > 3) {
        s[3] = -s[1];
    }
    if (count > 4) {
        s[4] = s[0];
    }
}

} // namespace detail

/// Dense feedforward network R -> R with Taylor-jet input derivatives and
/// exact parameter gradients of any scalar built from those jets.
///
/// Parameters live in one flat vector laid out layer by layer as
/// [W_1 (column-major), b_1, W_2, b_2, ...].
template <typename Scalar>
class DiffNet {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Array2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Jets = JetBatch<Scalar>;

    /// Builds a dL/d(jets) adjoint for the given jets and returns L.
    using JetLoss = std::function<Scalar(const Jets& jets, Jets& adjoint)>;

    DiffNet() = default;

    explicit DiffNet(const NetConfig& cfg) : config_(cfg)
    {
        if (cfg.layers < 1 || cfg.width < 1) {
            throw std::invalid_argument("DiffNet: layers and width must be positive");
        }
        sizes_.push_back(1);
        for (int l = 0; l < cfg.layers; ++l) {
            sizes_.push_back(cfg.width);
        }
        sizes_.push_back(1);
        Eigen::Index offset = 0;
        for (std::size_t l = 1; l < sizes_.size(); ++l) {
            weight_offset_.push_back(offset);
            offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l - 1];
            bias_offset_.push_back(offset);
            offset += sizes_[l];
        }
        params_ = Vector::Zero(offset);
    }

    const NetConfig& config() const { return config_; }
    /// Number of affine layers, hidden layers plus the output layer.
    int affine_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    Eigen::Index dof() const { return params_.size(); }

    const Vector& parameters() const { return params_; }
    void set_parameters(const Vector& p)
    {
        if (p.size() != params_.size()) {
            throw std::invalid_argument("DiffNet::set_parameters: size mismatch");
        }
        params_ = p;
    }

    Eigen::Map<const Matrix> weight(int l) const
    {
        return {params_.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]};
    }
    Eigen::Map<Matrix> weight(int l)
    {
        return {params_.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]};
    }
    Eigen::Map<const Vector> bias(int l) const
    {
        return {params_.data() + bias_offset_[l], sizes_[l + 1]};
    }
    Eigen::Map<Vector> bias(int l) { return {params_.data() + bias_offset_[l], sizes_[l + 1]}; }

    /// u and its input derivatives up to max_order at each point.
    Jets forward_jets(const Eigen::Ref<const Vector>& points, int max_order) const
    {
        Tape tape;
        return forward(points, max_order, tape, false);
    }

    /// Evaluates loss(jets(points)) and writes its exact parameter gradient.
    Scalar param_gradient(const Eigen::Ref<const Vector>& points, int max_order,
                          const JetLoss& loss, Vector& gradient) const
    {
        Tape tape;
        const Jets jets = forward(points, max_order, tape, true);
        Jets adjoint = jets.zeros_like();
        const Scalar value = loss(jets, adjoint);
        backward(tape, adjoint, gradient);
        return value;
    }

private:
    struct Tape {
        int order = 0;
        Eigen::Index count = 0;
        std::vector<std::array<Array2, kMaxJetOrder + 1>> pre;        // z per hidden layer
        std::vector<std::array<Array2, kMaxJetOrder + 1>> post;       // sigma(z) jets
        std::vector<std::array<Array2, 5>> sigma;                     // sigma^(j)(z0)
        Eigen::Array<Scalar, 1, Eigen::Dynamic> input;
    };

    Jets forward(const Eigen::Ref<const Vector>& points, int max_order, Tape& tape,
                 bool keep) const
    {
        if (max_order < 0 || max_order > kMaxJetOrder) {
            throw std::invalid_argument("forward_jets: max_order must be in [0, 3]");
        }
        if (!points.allFinite()) {
            throw std::invalid_argument("forward_jets: non-finite input point");
        }
        const Eigen::Index M = points.size();
        const int hidden = affine_layers() - 1;
        tape.order = max_order;
        tape.count = M;
        tape.input = points.transpose().array();
        if (keep) {
            tape.pre.resize(hidden);
            tape.post.resize(hidden);
            tape.sigma.resize(hidden);
        }

        std::array<Array2, kMaxJetOrder + 1> a;
        std::array<Array2, kMaxJetOrder + 1> z;
        std::array<Array2, 5> s;
        for (int l = 0; l < hidden; ++l) {
            const auto W = weight(l);
            const auto b = bias(l);
            if (l == 0) {
                // Input jet is (x, 1, 0, 0).
                z[0] = (W * tape.input.matrix()).array().colwise() + b.array();
                if (max_order >= 1) {
                    z[1] = W.col(0).array().replicate(1, M);
                }
                for (int j = 2; j <= max_order; ++j) {
                    z[j] = Array2::Zero(sizes_[1], M);
                }
            } else {
                z[0] = (W * a[0].matrix()).array().colwise() + b.array();
                for (int j = 1; j <= max_order; ++j) {
                    z[j] = (W * a[j].matrix()).array();
                }
            }
            detail::activation_derivatives(config_.activation, z[0], max_order + (keep ? 2 : 1), s);
            a[0] = s[0];
            if (max_order >= 1) {
                a[1] = s[1] * z[1];
            }
            if (max_order >= 2) {
                a[2] = s[2] * z[1].square() + s[1] * z[2];
            }
            if (max_order >= 3) {
                a[3] = s[3] * z[1].cube() + 3 * s[2] * z[1] * z[2] + s[1] * z[3];
            }
            if (keep) {
                tape.pre[l] = z;
                tape.post[l] = a;
                tape.sigma[l] = s;
            }
        }

        Jets jets;
        jets.points = points.array();
        jets.max_order = max_order;
        const auto W = weight(hidden);
        const Scalar b = bias(hidden)[0];
        jets.d[0] = (W * a[0].matrix()).transpose().array() + b;
        for (int j = 1; j <= max_order; ++j) {
            jets.d[j] = (W * a[j].matrix()).transpose().array();
        }
        return jets;
    }

    void backward(const Tape& tape, const Jets& adjoint, Vector& gradient) const
    {
        gradient = Vector::Zero(params_.size());
        const int K = tape.order;
        const int hidden = affine_layers() - 1;

        // Output layer.
        std::array<Array2, kMaxJetOrder + 1> ga;
        {
            Eigen::Map<Matrix> gW(gradient.data() + weight_offset_[hidden], 1, sizes_[hidden]);
            const auto W = weight(hidden);
            for (int j = 0; j <= K; ++j) {
                const auto gy = adjoint.d[j].transpose().matrix();
                gW.noalias() += gy * tape.post[hidden - 1][j].matrix().transpose();
                ga[j] = (W.transpose() * gy).array();
            }
            gradient[bias_offset_[hidden]] = adjoint.d[0].sum();
        }

        std::array<Array2, kMaxJetOrder + 1> gz;
        for (int l = hidden - 1; l >= 0; --l) {
            const auto& z = tape.pre[l];
            const auto& s = tape.sigma[l];
            gz[0] = ga[0] * s[1];
            if (K >= 1) {
                gz[0] += ga[1] * s[2] * z[1];
                gz[1] = ga[1] * s[1];
            }
            if (K >= 2) {
                gz[0] += ga[2] * (s[3] * z[1].square() + s[2] * z[2]);
                gz[1] += 2 * ga[2] * s[2] * z[1];
                gz[2] = ga[2] * s[1];
            }
            if (K >= 3) {
                gz[0] += ga[3] * (s[4] * z[1].cube() + 3 * s[3] * z[1] * z[2] + s[2] * z[3]);
                gz[1] += ga[3] * (3 * s[3] * z[1].square() + 3 * s[2] * z[2]);
                gz[2] += 3 * ga[3] * s[2] * z[1];
                gz[3] = ga[3] * s[1];
            }

            Eigen::Map<Matrix> gW(gradient.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]);
            Eigen::Map<Vector> gb(gradient.data() + bias_offset_[l], sizes_[l + 1]);
            gb = gz[0].rowwise().sum().matrix();
            if (l == 0) {
                gW.col(0) = (gz[0].matrix() * tape.input.matrix().transpose());
                if (K >= 1) {
                    gW.col(0) += gz[1].rowwise().sum().matrix();
                }
                break;
            }
            const auto& a = tape.post[l - 1];
            const auto W = weight(l);
            for (int j = 0; j <= K; ++j) {
                gW.noalias() += gz[j].matrix() * a[j].matrix().transpose();
                ga[j] = (W.transpose() * gz[j].matrix()).array();
            }
        }
    }

    NetConfig config_;
    std::vector<int> sizes_;
    std::vector<Eigen::Index> weight_offset_;
    std::vector<Eigen::Index> bias_offset_;
    Vector params_;
};

using Net = DiffNet<double>;

/// Glorot-uniform weights, zero biases, reproducible from cfg.seed.
template <typename Scalar = double>
DiffNet<Scalar> init_network(const NetConfig& cfg)
{
    DiffNet<Scalar> net(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (int l = 0; l < net.affine_layers(); ++l) {
        auto W = net.weight(l);
        const double bound = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index c = 0; c < W.cols(); ++c) {
            for (Eigen::Index r = 0; r < W.rows(); ++r) {
                W(r, c) = static_cast<Scalar>(dist(rng));
            }
        }
        net.bias(l).setZero();
    }
    return net;
}

/// Closed-form parameter count sum_l (n_{l-1} n_l + n_l).
constexpr long expected_dof(int layers, int width)
{
    return (1L * width + width) + (layers - 1L) * (1L * width * width + width) + (width + 1L);
}

/// Checkpoint: "FENNMNET", u32 layers, u32 width, u32 activation, u32 zero,
/// u64 seed, u64 dof, then dof little-endian float64 values.
void write_checkpoint(std::ostream& out, const Net& net);
Net read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Net& net);
Net load_checkpoint(const std::string& path);

} // namespace fennm
