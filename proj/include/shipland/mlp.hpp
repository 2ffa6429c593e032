#pragma once
/**
 * @file mlp.hpp
 * @brief Dense feed-forward networks with analytic gradients and Adam.
 *
 * Batches are column-major: an input batch is an (in x B) matrix with one
 * sample per column. Hidden layers use ReLU; the output activation is
 * chosen per network (tanh for actors, identity for critics).
 */

#include <shipland/errors.hpp>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace shipland {

enum class Activation { Identity, Relu, Tanh };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        default: return "tanh";
    }
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + s + "'");
}

/// Weights and biases of every layer; also used for gradients and Adam moments.
template <class T>
struct MlpParams {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    std::vector<Matrix> w;
    std::vector<Vector> b;

    static MlpParams zeros_like(const MlpParams& o) {
        MlpParams z;
        for (const auto& m : o.w) z.w.push_back(Matrix::Zero(m.rows(), m.cols()));
        for (const auto& v : o.b) z.b.push_back(Vector::Zero(v.size()));
        return z;
    }

    bool all_finite() const {
        for (const auto& m : w)
            if (!m.allFinite()) return false;
        for (const auto& v : b)
            if (!v.allFinite()) return false;
        return true;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& m : w) n += static_cast<std::size_t>(m.size());
        for (const auto& v : b) n += static_cast<std::size_t>(v.size());
        return n;
    }
};

template <class T>
class Mlp {
public:
    using Matrix = typename MlpParams<T>::Matrix;
    using Vector = typename MlpParams<T>::Vector;
    using Params = MlpParams<T>;

    /// Activations of every layer for one forward pass; a[0] is the input.
    struct Cache {
        std::vector<Matrix> a;
    };

    struct Gradients {
        Params params;
        Matrix input;  // d loss / d x, same shape as the input batch
    };

    Mlp() = default;

    /// All-zero parameters.
    Mlp(std::vector<int> widths, Activation output) : widths_(std::move(widths)), output_(output) {
        if (widths_.size() < 2) throw ShapeMismatch("an MLP needs at least an input and an output width");
        for (int wdt : widths_)
            if (wdt < 1) throw ShapeMismatch("layer widths must be >= 1");
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            params_.w.push_back(Matrix::Zero(widths_[l + 1], widths_[l]));
            params_.b.push_back(Vector::Zero(widths_[l + 1]));
        }
    }

    /// Uniform initialisation in +-1/sqrt(fan_in).
    template <class Rng>
    Mlp(std::vector<int> widths, Activation output, Rng& rng) : Mlp(std::move(widths), output) {
        for (std::size_t l = 0; l < params_.w.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index i = 0; i < params_.w[l].size(); ++i) params_.w[l].data()[i] = static_cast<T>(u(rng));
            for (Eigen::Index i = 0; i < params_.b[l].size(); ++i) params_.b[l][i] = static_cast<T>(u(rng));
        }
    }

    const std::vector<int>& widths() const { return widths_; }
    int input_size() const { return widths_.front(); }
    int output_size() const { return widths_.back(); }
    std::size_t layers() const { return params_.w.size(); }
    Activation output_activation() const { return output_; }

    Params& params() { return params_; }
    const Params& params() const { return params_; }

    Matrix forward(const Matrix& x) const {
        Cache c;
        return forward(x, c);
    }

    Matrix forward(const Matrix& x, Cache& cache) const {
        if (x.rows() != input_size()) throw ShapeMismatch("input has wrong dimension");
        cache.a.resize(layers() + 1);
        cache.a[0] = x;
        for (std::size_t l = 0; l < layers(); ++l) {
            Matrix z = params_.w[l] * cache.a[l];
            z.colwise() += params_.b[l];
            const bool last = l + 1 == layers();
            apply(last ? output_ : Activation::Relu, z);
            cache.a[l + 1] = std::move(z);
        }
        return cache.a.back();
    }

    /// Reverse-mode gradients of sum_j upstream(:, j) . y(:, j).
    Gradients backward(const Cache& cache, const Matrix& upstream) const {
        if (cache.a.size() != layers() + 1) throw ShapeMismatch("forward cache does not match the network");
        const Matrix& y = cache.a.back();
        if (upstream.rows() != y.rows() || upstream.cols() != y.cols())
            throw ShapeMismatch("upstream gradient does not match the output batch");

        Gradients g;
        g.params = Params::zeros_like(params_);
        Matrix delta = upstream;
        scale_by_derivative(output_, y, delta);
        for (std::size_t l = layers(); l-- > 0;) {
            g.params.w[l].noalias() = delta * cache.a[l].transpose();
            g.params.b[l] = delta.rowwise().sum();
            Matrix prev = params_.w[l].transpose() * delta;
            if (l > 0) scale_by_derivative(Activation::Relu, cache.a[l], prev);
            delta = std::move(prev);
        }
        g.input = std::move(delta);
        return g;
    }

    friend bool operator==(const Mlp& a, const Mlp& b) {
        if (a.widths_ != b.widths_ || a.output_ != b.output_) return false;
        for (std::size_t l = 0; l < a.layers(); ++l)
            if (a.params_.w[l] != b.params_.w[l] || a.params_.b[l] != b.params_.b[l]) return false;
        return true;
    }

private:
    static void apply(Activation act, Matrix& z) {
        switch (act) {
            case Activation::Identity: break;
            case Activation::Relu: z = z.cwiseMax(T(0)); break;
            case Activation::Tanh: z = z.array().tanh().matrix(); break;
        }
    }

    // Multiply `delta` elementwise by the activation derivative, written in
    // terms of the activation output `y`.
    static void scale_by_derivative(Activation act, const Matrix& y, Matrix& delta) {
        switch (act) {
            case Activation::Identity: break;
            case Activation::Relu: delta = (y.array() > T(0)).select(delta, T(0)); break;
            case Activation::Tanh: delta = (delta.array() * (T(1) - y.array().square())).matrix(); break;
        }
    }

    std::vector<int> widths_;
    Activation output_ = Activation::Identity;
    Params params_;
};

/// target <- tau * source + (1 - tau) * target
template <class T>
void soft_update(Mlp<T>& target, const Mlp<T>& source, double tau) {
    auto& tp = target.params();
    const auto& sp = source.params();
    const T a = static_cast<T>(tau);
    const T b = static_cast<T>(1.0 - tau);
    for (std::size_t l = 0; l < tp.w.size(); ++l) {
        tp.w[l] = a * sp.w[l] + b * tp.w[l];
        tp.b[l] = a * sp.b[l] + b * tp.b[l];
    }
}

// ---------------------------------------------------------------------------
// Adam

template <class T>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    MlpParams<T> m;
    MlpParams<T> v;

    AdamState() = default;
    AdamState(const MlpParams<T>& like, double learning_rate)
        : lr(learning_rate), m(MlpParams<T>::zeros_like(like)), v(MlpParams<T>::zeros_like(like)) {}
};

/**
 * One bias-corrected Adam step descending `grads`. Throws NonFiniteGradient
 * (leaving parameters and state untouched) if any gradient entry is not
 * finite.
 */
template <class T>
void adam_step(MlpParams<T>& params, const MlpParams<T>& grads, AdamState<T>& st) {
    if (grads.w.size() != params.w.size() || grads.b.size() != params.b.size() ||
        st.m.w.size() != params.w.size())
        throw ShapeMismatch("Adam: parameter, gradient and state shapes differ");
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        if (grads.w[l].rows() != params.w[l].rows() || grads.w[l].cols() != params.w[l].cols() ||
            grads.b[l].size() != params.b[l].size())
            throw ShapeMismatch("Adam: gradient shape differs from parameters");
    }
    if (!grads.all_finite()) throw NonFiniteGradient("Adam: gradient contains NaN or Inf");

    ++st.step;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    const T b1 = static_cast<T>(st.beta1), b2 = static_cast<T>(st.beta2);
    const T lr_t = static_cast<T>(st.lr / c1);
    const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
    const T eps = static_cast<T>(st.eps);

    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
        p.array() -= lr_t * m.array() / ((v.array().sqrt() * inv_sqrt_c2) + eps);
    };
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        update(params.w[l], grads.w[l], st.m.w[l], st.v.w[l]);
        update(params.b[l], grads.b[l], st.m.b[l], st.v.b[l]);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints (JSON, doubles written with round-trip precision)

inline constexpr int kCheckpointVersion = 1;

template <class T>
nlohmann::json to_json(const Mlp<T>& net) {
    nlohmann::json j;
    j["format"] = "shipland-mlp";
    j["version"] = kCheckpointVersion;
    j["widths"] = net.widths();
    j["output"] = activation_name(net.output_activation());
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const auto& w = net.params().w[l];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(static_cast<double>(w(r, c)));
        j["weights"].push_back(flat);
        const auto& b = net.params().b[l];
        j["biases"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    return j;
}

template <class T>
Mlp<T> mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "shipland-mlp") throw ConfigError("not an MLP checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw ConfigError("unsupported checkpoint version " + j.at("version").dump());
        Mlp<T> net(j.at("widths").get<std::vector<int>>(), activation_from_name(j.at("output").get<std::string>()));
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        if (ws.size() != net.layers() || bs.size() != net.layers())
            throw ShapeMismatch("checkpoint layer count does not match widths");
        for (std::size_t l = 0; l < net.layers(); ++l) {
            auto flat = ws[l].get<std::vector<double>>();
            auto bias = bs[l].get<std::vector<double>>();
            auto& w = net.params().w[l];
            auto& b = net.params().b[l];
            if (flat.size() != static_cast<std::size_t>(w.size()) || bias.size() != static_cast<std::size_t>(b.size()))
                throw ShapeMismatch("checkpoint layer " + std::to_string(l) + " has wrong size");
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(flat[k++]);
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = static_cast<T>(bias[static_cast<std::size_t>(i)]);
        }
        if (!net.params().all_finite()) throw NonFinite("checkpoint contains non-finite parameters");
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

template <class T>
void save_checkpoint(const std::string& path, const Mlp<T>& net) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path);
    out << to_json(net).dump(1) << '\n';
}

template <class T>
Mlp<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse checkpoint " + path + ": " + e.what());
    }
    return mlp_from_json<T>(j);
}

}  // namespace shipland
