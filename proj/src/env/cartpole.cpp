#include "vqrl/env/cartpole.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vqrl::env {

CartPoleParams CartPoleParams::with_masses(double cart_mass, double pole_mass, double half_length) {
    CartPoleParams p;
    p.cart_mass = cart_mass;
    p.pole_mass = pole_mass;
    p.half_length = half_length;
    p.validate();
    return p;
}

void CartPoleParams::validate() const {
    if (!(cart_mass > 0.0 && pole_mass > 0.0 && half_length > 0.0)) {
        throw std::invalid_argument("cartpole: masses and pole length must be positive");
    }
    if (!(tau > 0.0) || max_steps <= 0) {
        throw std::invalid_argument("cartpole: tau and max_steps must be positive");
    }
}

namespace {

struct Accelerations {
    double x_acc;
    double theta_acc;
};

Accelerations accelerations(const CartPoleState& s, std::size_t action, const CartPoleParams& p) {
    if (action > 1) {
        throw std::out_of_range("cartpole: action " + std::to_string(action) + " not in {0, 1}");
    }
    const double force = action == 1 ? p.force : -p.force;
    const double total_mass = p.cart_mass + p.pole_mass;
    const double polemass_length = p.pole_mass * p.half_length;
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);
    const double temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
                             (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
    return {x_acc, theta_acc};
}

}  // namespace

double cartpole_angular_acceleration(const CartPoleState& state, std::size_t action,
                                     const CartPoleParams& params) {
    return accelerations(state, action, params).theta_acc;
}

bool cartpole_within_bounds(const CartPoleState& s, const CartPoleParams& p) {
    return s.x >= -p.x_threshold && s.x <= p.x_threshold && s.theta >= -p.theta_threshold &&
           s.theta <= p.theta_threshold;
}

CartPoleTransition cartpole_step(const CartPoleState& s, std::size_t action, const CartPoleParams& p) {
    const auto acc = accelerations(s, action, p);
    CartPoleTransition t;
    t.next.x = s.x + p.tau * s.x_dot;
    t.next.x_dot = s.x_dot + p.tau * acc.x_acc;
    t.next.theta = s.theta + p.tau * s.theta_dot;
    t.next.theta_dot = s.theta_dot + p.tau * acc.theta_acc;
    t.reward = 1.0;
    t.terminated = !cartpole_within_bounds(t.next, p);
    return t;
}

CartPoleEnv::CartPoleEnv(std::vector<CartPoleParams> param_set, std::size_t frame_stack, std::uint64_t seed)
    : param_set_(std::move(param_set)), frame_stack_(frame_stack), rng_(seed) {
    if (param_set_.empty()) {
        throw std::invalid_argument("cartpole: empty parameter set");
    }
    if (frame_stack_ == 0) {
        throw std::invalid_argument("cartpole: frame stack must be at least 1");
    }
    for (const auto& p : param_set_) {
        p.validate();
    }
    params_ = param_set_.front();
}

std::vector<double> CartPoleEnv::reset() {
    if (param_set_.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, param_set_.size() - 1);
        params_ = param_set_[pick(rng_)];
    }
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    state_.x = init(rng_);
    state_.x_dot = init(rng_);
    state_.theta = init(rng_);
    state_.theta_dot = init(rng_);
    steps_ = 0;
    needs_reset_ = false;
    window_.assign(frame_stack_, state_);
    return observation();
}

StepResult CartPoleEnv::step(std::size_t action) {
    if (needs_reset_) {
        throw std::logic_error("cartpole: step called on a finished episode");
    }
    const auto t = cartpole_step(state_, action, params_);
    state_ = t.next;
    ++steps_;
    window_.pop_front();
    window_.push_back(state_);

    StepResult r;
    r.observation = observation();
    r.reward = t.reward;
    r.terminated = t.terminated;
    r.truncated = !t.terminated && steps_ >= params_.max_steps;
    needs_reset_ = r.done();
    return r;
}

std::vector<double> CartPoleEnv::observation() const {
    std::vector<double> obs;
    obs.reserve(4 * frame_stack_);
    for (const auto& s : window_) {
        const auto a = s.as_array();
        obs.insert(obs.end(), a.begin(), a.end());
    }
    return obs;
}

std::vector<CartPoleParams> gen_cartpole_training_set() {
    return {CartPoleParams::with_masses(0.5, 0.05, 0.25), CartPoleParams::with_masses(1.0, 0.1, 0.5),
            CartPoleParams::with_masses(2.0, 0.2, 1.0)};
}

std::vector<CartPoleParams> gen_cartpole_test_set() {
    return {CartPoleParams::with_masses(0.75, 0.075, 0.375), CartPoleParams::with_masses(1.5, 0.15, 0.75),
            CartPoleParams::with_masses(3.0, 0.3, 1.5), CartPoleParams::with_masses(5.0, 0.5, 2.5),
            CartPoleParams::with_masses(7.5, 0.75, 3.75)};
}

}  // namespace vqrl::env
