#pragma once
/**
 * @file rl.hpp
 * @brief Single-axis MDP and TD3 training for the roll and pitch controllers.
 *
 * Each axis has its own agent. Its state is the six most recent (position,
 * velocity) estimates along that axis; its action is a tilt command in
 * [-1, 1]. Roll acts on the lateral (y) axis, pitch on the longitudinal (x)
 * axis.
 */

#include <shipland/errors.hpp>
#include <shipland/mlp.hpp>
#include <shipland/sim.hpp>
#include <shipland/wind.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace shipland {

inline constexpr int kHistoryLength = 6;
inline constexpr int kStateSize = 2 * kHistoryLength;
inline constexpr int kActionHistory = 5;

using StateVector = Eigen::Matrix<double, kStateSize, 1>;

/// Index of the target-frame coordinate an axis controller acts on.
inline int axis_index(Axis a) { return a == Axis::Roll ? 1 : 0; }

/**
 * Most-recent-first concatenation (p_t, v_t, p_{t-1}, v_{t-1}, ...). Missing
 * slots early in an episode are zero.
 */
inline StateVector assemble_state(std::span<const std::pair<double, double>> most_recent_first) {
    StateVector s = StateVector::Zero();
    const std::size_t n = std::min<std::size_t>(most_recent_first.size(), kHistoryLength);
    for (std::size_t i = 0; i < n; ++i) {
        s[static_cast<Eigen::Index>(2 * i)] = most_recent_first[i].first;
        s[static_cast<Eigen::Index>(2 * i + 1)] = most_recent_first[i].second;
    }
    return s;
}

class StateHistory {
public:
    void reset() { items_.clear(); }
    void push(double p, double v) {
        items_.emplace_front(p, v);
        if (items_.size() > kHistoryLength) items_.pop_back();
    }
    StateVector assemble() const {
        std::vector<std::pair<double, double>> v(items_.begin(), items_.end());
        return assemble_state(v);
    }
    std::size_t size() const { return items_.size(); }

private:
    std::deque<std::pair<double, double>> items_;
};

// ---------------------------------------------------------------------------
// Reward

struct RewardParams {
    double inner = 0.1;   // m, no distance penalty inside
    double safe = 0.4;    // m, linear distance penalty up to here
    double outer = 2.0;   // m, episode terminates beyond
    double coef_diff = 1.0 / 20.0;
    double coef_action = 1.0 / 10.0;
    double coef_distance = 2.0;
};

/// Current action minus the mean of the previous actions (0 if none).
inline double action_difference(double a, std::span<const double> a_hist) {
    if (a_hist.empty()) return 0.0;
    const double mean = std::accumulate(a_hist.begin(), a_hist.end(), 0.0) / static_cast<double>(a_hist.size());
    return a - mean;
}

inline bool is_terminal(double d, const RewardParams& p = {}) { return std::abs(d) > p.outer; }

/**
 * Four-region penalty. Boundaries belong to the inner region. The terminal
 * penalty is -(t_max - t_inside), so t_max and t_inside must share a unit.
 */
inline double reward_from_diff(double d, double a, double a_diff, double t_max, double t_inside,
                               const RewardParams& p = {}) {
    const double ad = std::abs(d);
    const double smooth = p.coef_diff * std::abs(a_diff) + p.coef_action * std::abs(a);
    if (ad <= p.inner) return -smooth;
    if (ad <= p.safe) return -p.coef_distance * ad - smooth;
    if (ad <= p.outer) return -1.0;
    return -(t_max - t_inside);
}

inline double reward(double d, double a, std::span<const double> a_hist, double t_max, double t_inside,
                     const RewardParams& p = {}) {
    return reward_from_diff(d, a, action_difference(a, a_hist), t_max, t_inside, p);
}

// ---------------------------------------------------------------------------
// Replay buffer

struct Transition {
    StateVector s = StateVector::Zero();
    double a = 0.0;
    double r = 0.0;
    StateVector s2 = StateVector::Zero();
    bool done = false;
};

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
        data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    }

    void push(const Transition& t) {
        if (data_.size() < capacity_) {
            data_.push_back(t);
        } else {
            data_[next_] = t;
        }
        next_ = (next_ + 1) % capacity_;
        ++total_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t total_pushed() const { return total_; }

    /// i-th transition counted from the oldest still stored.
    const Transition& at(std::size_t i) const {
        if (i >= data_.size()) throw std::out_of_range("replay index");
        return data_.size() < capacity_ ? data_[i] : data_[(next_ + i) % capacity_];
    }

    /// Uniform sample with replacement.
    template <class Rng>
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
        if (data_.size() < n || data_.empty()) throw BufferTooSmall("replay buffer holds fewer transitions than the batch");
        std::uniform_int_distribution<std::size_t> u(0, data_.size() - 1);
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = u(rng);
        return idx;
    }

    const Transition& raw(std::size_t i) const { return data_[i]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::size_t total_ = 0;
    std::vector<Transition> data_;
};

// ---------------------------------------------------------------------------
// TD3

struct Td3Config {
    double gamma = 0.99;
    int policy_delay = 2;
    double actor_lr = 1e-4;
    double critic_lr = 1e-4;
    std::size_t buffer_capacity = 100000;
    double target_noise = 0.2;
    double target_noise_clip = 0.5;
    double explore_sigma = 0.1;
    double tau = 0.005;
    std::size_t batch_size = 256;
    long warmup_steps = 1000;
    std::vector<int> hidden{64, 64};

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("td3.gamma must lie in (0, 1)");
        if (policy_delay < 1) throw ConfigError("td3.policy_delay must be >= 1");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("td3.tau must lie in (0, 1]");
        if (batch_size < 1 || buffer_capacity < batch_size) throw ConfigError("td3 batch/buffer sizes invalid");
        if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("td3 learning rates must be > 0");
        if (!(target_noise >= 0.0) || !(target_noise_clip >= 0.0) || !(explore_sigma >= 0.0))
            throw ConfigError("td3 noise scales must be >= 0");
        if (warmup_steps < 0) throw ConfigError("td3.warmup_steps must be >= 0");
    }
};

/// y = r + gamma * (1 - done) * min(q1, q2), elementwise.
template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> critic_targets(const Eigen::ArrayBase<Derived>& r,
                                                                         const Eigen::ArrayBase<Derived>& done,
                                                                         const Eigen::ArrayBase<Derived>& q1,
                                                                         const Eigen::ArrayBase<Derived>& q2,
                                                                         double gamma) {
    using S = typename Derived::Scalar;
    return r + static_cast<S>(gamma) * (S(1) - done) * q1.min(q2);
}

template <class T>
double actor_output(const Mlp<T>& actor, const StateVector& s) {
    return static_cast<double>(actor.forward(s.cast<T>())(0, 0));
}

/// tanh actor output plus optional Gaussian exploration, clamped to [-1, 1].
template <class T, class Rng>
double select_action(const Mlp<T>& actor, const StateVector& s, double explore_sigma, Rng& rng) {
    double a = actor_output(actor, s);
    if (explore_sigma > 0.0) a += std::normal_distribution<double>(0.0, explore_sigma)(rng);
    return std::clamp(a, -1.0, 1.0);
}

struct UpdateStats {
    double critic_loss = 0.0;
    bool actor_updated = false;
};

template <class T = float>
class Td3Agent {
public:
    using Net = Mlp<T>;
    using Matrix = typename Net::Matrix;

    template <class Rng>
    Td3Agent(const Td3Config& cfg, Rng& rng) : cfg_(cfg) {
        cfg_.validate();
        std::vector<int> aw{kStateSize};
        aw.insert(aw.end(), cfg_.hidden.begin(), cfg_.hidden.end());
        aw.push_back(1);
        std::vector<int> cw{kStateSize + 1};
        cw.insert(cw.end(), cfg_.hidden.begin(), cfg_.hidden.end());
        cw.push_back(1);
        actor_ = Net(aw, Activation::Tanh, rng);
        critic1_ = Net(cw, Activation::Identity, rng);
        critic2_ = Net(cw, Activation::Identity, rng);
        actor_t_ = actor_;
        critic1_t_ = critic1_;
        critic2_t_ = critic2_;
        actor_opt_ = AdamState<T>(actor_.params(), cfg_.actor_lr);
        critic1_opt_ = AdamState<T>(critic1_.params(), cfg_.critic_lr);
        critic2_opt_ = AdamState<T>(critic2_.params(), cfg_.critic_lr);
    }

    const Td3Config& config() const { return cfg_; }
    const Net& actor() const { return actor_; }
    const Net& critic1() const { return critic1_; }
    const Net& critic2() const { return critic2_; }
    const Net& actor_target() const { return actor_t_; }
    const Net& critic1_target() const { return critic1_t_; }
    const Net& critic2_target() const { return critic2_t_; }
    Net& actor() { return actor_; }
    Net& critic1() { return critic1_; }
    Net& critic2() { return critic2_; }
    Net& actor_target() { return actor_t_; }
    Net& critic1_target() { return critic1_t_; }
    Net& critic2_target() { return critic2_t_; }
    long updates() const { return updates_; }

    template <class Rng>
    double select_action(const StateVector& s, double explore_sigma, Rng& rng) const {
        return shipland::select_action(actor_, s, explore_sigma, rng);
    }

    /**
     * One TD3 iteration on a uniformly sampled batch: both critics regress
     * to the clipped double-Q target; every `policy_delay`-th call the actor
     * ascends Q1 and all target networks are soft-updated.
     */
    template <class Rng>
    UpdateStats update(const ReplayBuffer& buffer, Rng& rng) {
        const std::size_t n = cfg_.batch_size;
        const auto idx = buffer.sample_indices(n, rng);
        const Eigen::Index b = static_cast<Eigen::Index>(n);

        Matrix s(kStateSize, b), s2(kStateSize, b), a(1, b);
        Eigen::Array<T, Eigen::Dynamic, 1> r(b), done(b);
        for (Eigen::Index j = 0; j < b; ++j) {
            const Transition& tr = buffer.raw(idx[static_cast<std::size_t>(j)]);
            s.col(j) = tr.s.cast<T>();
            s2.col(j) = tr.s2.cast<T>();
            a(0, j) = static_cast<T>(tr.a);
            r(j) = static_cast<T>(tr.r);
            done(j) = tr.done ? T(1) : T(0);
        }

        // Target policy smoothing.
        Matrix a2 = actor_t_.forward(s2);
        std::normal_distribution<double> noise(0.0, cfg_.target_noise);
        for (Eigen::Index j = 0; j < b; ++j) {
            const double e = std::clamp(cfg_.target_noise > 0.0 ? noise(rng) : 0.0, -cfg_.target_noise_clip,
                                        cfg_.target_noise_clip);
            a2(0, j) = static_cast<T>(std::clamp(static_cast<double>(a2(0, j)) + e, -1.0, 1.0));
        }
        Matrix x2(kStateSize + 1, b);
        x2 << s2, a2;
        const Eigen::Array<T, Eigen::Dynamic, 1> q1t = critic1_t_.forward(x2).row(0).transpose().array();
        const Eigen::Array<T, Eigen::Dynamic, 1> q2t = critic2_t_.forward(x2).row(0).transpose().array();
        const Eigen::Array<T, Eigen::Dynamic, 1> y = critic_targets(r, done, q1t, q2t, cfg_.gamma);

        Matrix x(kStateSize + 1, b);
        x << s, a;
        UpdateStats st;
        st.critic_loss = regress(critic1_, critic1_opt_, x, y) + regress(critic2_, critic2_opt_, x, y);

        ++updates_;
        if (updates_ % cfg_.policy_delay == 0) {
            typename Net::Cache ac, cc;
            const Matrix pa = actor_.forward(s, ac);
            Matrix xp(kStateSize + 1, b);
            xp << s, pa;
            critic1_.forward(xp, cc);
            // Ascend mean Q1: descend -Q1 / B.
            const Matrix up = Matrix::Constant(1, b, static_cast<T>(-1.0 / static_cast<double>(n)));
            const auto cg = critic1_.backward(cc, up);
            const Matrix da = cg.input.bottomRows(1);
            const auto ag = actor_.backward(ac, da);
            adam_step(actor_.params(), ag.params, actor_opt_);
            soft_update(actor_t_, actor_, cfg_.tau);
            soft_update(critic1_t_, critic1_, cfg_.tau);
            soft_update(critic2_t_, critic2_, cfg_.tau);
            st.actor_updated = true;
        }
        return st;
    }

private:
    // Mean squared error step; returns the loss before the step.
    static double regress(Net& critic, AdamState<T>& opt, const Matrix& x,
                          const Eigen::Array<T, Eigen::Dynamic, 1>& y) {
        typename Net::Cache c;
        const Matrix q = critic.forward(x, c);
        const Matrix err = q - y.transpose().matrix();
        const double n = static_cast<double>(x.cols());
        const Matrix up = err * static_cast<T>(2.0 / n);
        const auto g = critic.backward(c, up);
        adam_step(critic.params(), g.params, opt);
        return static_cast<double>(err.squaredNorm()) / n;
    }

    Td3Config cfg_;
    Net actor_, critic1_, critic2_;
    Net actor_t_, critic1_t_, critic2_t_;
    AdamState<T> actor_opt_, critic1_opt_, critic2_opt_;
    long updates_ = 0;
};

// ---------------------------------------------------------------------------
// Single-axis environment

/// Per-episode domain randomisation.
struct Randomization {
    bool wind = true;
    WindRanges wind_ranges;
    double noise_min = 0.0;  // observation sigma, m
    double noise_max = 0.05;
    int delay_min = 0;  // control steps
    int delay_max = 3;
    double jitter = 0.2;    // relative +- range on mass, drag and lag
    double init_pos = 1.5;  // initial |d| drawn uniformly up to this, m
    double init_vel = 0.5;  // initial |v|, m/s

    /// Everything off: no wind, perfect observations, nominal dynamics.
    static Randomization none() {
        Randomization r;
        r.wind = false;
        r.noise_max = 0.0;
        r.delay_max = 0;
        r.jitter = 0.0;
        return r;
    }
};

/**
 * Hover-over-target task along one axis. Reward and termination use the true
 * relative position; the agent's state uses the observer's estimates.
 */
class AxisEnv {
public:
    struct StepResult {
        StateVector state;
        double reward = 0.0;
        bool done = false;       // terminal (|d| beyond the outer band)
        bool truncated = false;  // horizon reached
        double d = 0.0;          // true position error after the step
    };

    AxisEnv(Axis axis, SimConfig sim, RewardParams reward = {})
        : axis_(axis), sim_(sim), reward_(reward), observer_(ObservationConfig{}, sim.dt) {
        sim_.validate();
    }

    Axis axis() const { return axis_; }
    int horizon() const { return static_cast<int>(std::lround(sim_.t_max / sim_.dt)); }
    const SimConfig& sim() const { return sim_; }
    double time() const { return steps_ * sim_.dt; }
    const UavState& uav() const { return uav_; }

    template <class Rng>
    StateVector reset(double d0, double v0, WindScenario wind, ObservationConfig obs, const SimConfig& sim, Rng& rng) {
        sim.validate();
        sim_ = sim;
        wind_ = std::move(wind);
        observer_ = Observer(obs, sim_.dt);
        uav_ = UavState{};
        uav_.position[axis_index(axis_)] = d0;
        uav_.velocity[axis_index(axis_)] = v0;
        observer_.reset(uav_);
        steps_ = 0;
        history_.reset();
        actions_.clear();
        const Observation o = observer_.observe(uav_, rng);
        history_.push(o.position[axis_index(axis_)], o.velocity[axis_index(axis_)]);
        return history_.assemble();
    }

    template <class Rng>
    StepResult step(double a, Rng& rng) {
        a = std::clamp(a, -1.0, 1.0);
        Action act;
        (axis_ == Axis::Roll ? act.roll : act.pitch) = a;
        const Eigen::Vector3d w = wind_at(wind_, time());
        uav_ = shipland::step(uav_, act, w, sim_);
        const int inside_steps = steps_;
        ++steps_;

        StepResult res;
        res.d = uav_.position[axis_index(axis_)];
        res.reward = reward(res.d, a, actions_, horizon(), inside_steps, reward_);
        res.done = is_terminal(res.d, reward_);
        res.truncated = !res.done && steps_ >= horizon();

        actions_.push_back(a);
        if (actions_.size() > kActionHistory) actions_.erase(actions_.begin());
        const Observation o = observer_.observe(uav_, rng);
        history_.push(o.position[axis_index(axis_)], o.velocity[axis_index(axis_)]);
        res.state = history_.assemble();
        return res;
    }

private:
    Axis axis_;
    SimConfig sim_;
    RewardParams reward_;
    WindScenario wind_;
    Observer observer_;
    UavState uav_;
    int steps_ = 0;
    StateHistory history_;
    std::vector<double> actions_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    int episodes = 200;
    Td3Config td3;
    SimConfig sim;
    RewardParams reward;
    Randomization randomization;
};

struct EpisodeLog {
    int episode = 0;
    double ret = 0.0;
    int length = 0;
    std::string scenario;
    double max_abs_d = 0.0;
};

struct TrainResult {
    Mlp<float> actor;
    std::vector<EpisodeLog> log;
};

/// Relative change of mean return from the first to the last quartile.
inline double quartile_improvement(const std::vector<EpisodeLog>& log) {
    const std::size_t q = log.size() / 4;
    if (q == 0) return 0.0;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        first += log[i].ret;
        last += log[log.size() - q + i].ret;
    }
    first /= static_cast<double>(q);
    last /= static_cast<double>(q);
    return first == 0.0 ? 0.0 : (last - first) / std::abs(first);
}

/**
 * Train one axis controller. Each episode draws a wind scenario, observation
 * noise and delay, and jittered dynamics, then runs until the UAV leaves the
 * outer band or the horizon ends. One TD3 update follows every environment
 * step once the warm-up (uniform random actions) is over. `on_episode`, if
 * set, is called after every episode.
 */
template <class Rng = std::mt19937_64>
TrainResult train(Axis axis, const TrainConfig& cfg, std::uint64_t seed,
                  const std::function<void(const EpisodeLog&, const Td3Agent<float>&)>& on_episode = {}) {
    if (cfg.episodes < 1) throw ConfigError("train.episodes must be >= 1");
    cfg.sim.validate();
    const Randomization& rz = cfg.randomization;
    if (rz.noise_min < 0.0 || rz.noise_max < rz.noise_min || rz.delay_min < 0 || rz.delay_max < rz.delay_min ||
        rz.jitter < 0.0 || rz.jitter >= 1.0)
        throw ConfigError("invalid randomization ranges");

    Rng rng(seed);
    Td3Agent<float> agent(cfg.td3, rng);
    ReplayBuffer buffer(cfg.td3.buffer_capacity);
    AxisEnv env(axis, cfg.sim, cfg.reward);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    TrainResult out;
    long total_steps = 0;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        WindScenario wind = rz.wind ? sample_scenario(rng, axis, rz.wind_ranges) : WindScenario{};
        ObservationConfig obs;
        obs.noise_pos = std::uniform_real_distribution<double>(rz.noise_min, rz.noise_max)(rng);
        obs.delay = std::uniform_int_distribution<int>(rz.delay_min, rz.delay_max)(rng);
        SimConfig sim = cfg.sim;
        sim.mass *= 1.0 + rz.jitter * unit(rng);
        sim.drag *= 1.0 + rz.jitter * unit(rng);
        sim.lag *= 1.0 + rz.jitter * unit(rng);
        const double d0 = rz.init_pos * unit(rng);
        const double v0 = rz.init_vel * unit(rng);

        StateVector s = env.reset(d0, v0, wind, obs, sim, rng);
        EpisodeLog log;
        log.episode = ep;
        log.scenario = scenario_tag(wind);
        log.max_abs_d = std::abs(d0);
        for (int k = 0; k < env.horizon(); ++k) {
            const double a = total_steps < cfg.td3.warmup_steps ? unit(rng)
                                                                : agent.select_action(s, cfg.td3.explore_sigma, rng);
            const auto res = env.step(a, rng);
            buffer.push(Transition{s, a, res.reward, res.state, res.done});
            ++total_steps;
            if (total_steps > cfg.td3.warmup_steps && buffer.size() >= cfg.td3.batch_size) agent.update(buffer, rng);
            if (!std::isfinite(res.reward) || !res.state.allFinite()) throw NonFinite("training diverged");
            log.ret += res.reward;
            log.length = k + 1;
            log.max_abs_d = std::max(log.max_abs_d, std::abs(res.d));
            s = res.state;
            if (res.done) break;
        }
        out.log.push_back(log);
        if (on_episode) on_episode(log, agent);
    }
    out.actor = agent.actor();
    return out;
}

}  // namespace shipland
