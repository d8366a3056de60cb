#include <cmath>

#include "doctest.h"
#include "maskshare/nn/optim.hpp"
#include "maskshare/util/errors.hpp"

using namespace maskshare;

namespace {

nn::Mlp tiny_net(double theta) {
  nn::Mlp net;
  net.layer_sizes = {1, 1, 1};
  net.weights = {{theta}, {theta}};
  net.biases = {{0.0}, {0.0}};
  net.output_head = nn::OutputHead::kLinear;
  return net;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  auto net = tiny_net(1.25);
  auto grads = nn::GradientBuffer::like(net);
  const auto before = net.weights;
  nn::sgd_step(net, grads, 0.1);
  CHECK(net.weights == before);
  auto state = nn::RmsPropState::like(net);
  nn::rmsprop_step(net, grads, state, 0.1, 0.9, 1e-8);
  CHECK(net.weights == before);
}

TEST_CASE("sgd arithmetic: theta 1.0, g 0.5, lr 0.1 -> 0.95") {
  auto net = tiny_net(1.0);
  auto grads = nn::GradientBuffer::like(net);
  grads.weights[0][0] = 0.5;
  nn::sgd_step(net, grads, 0.1);
  CHECK(net.weights[0][0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(net.weights[1][0] == 1.0);
}

TEST_CASE("rmsprop single step from zero state matches the scalar recurrence") {
  auto net = tiny_net(2.0);
  auto grads = nn::GradientBuffer::like(net);
  grads.weights[0][0] = 1.0;
  auto state = nn::RmsPropState::like(net);
  nn::rmsprop_step(net, grads, state, 0.01, 0.9, 1e-8);
  // s = 0.9*0 + 0.1*1 = 0.1; delta = 0.01 / sqrt(0.1 + 1e-8)
  const double expected_delta = 0.01 / std::sqrt(0.1 * 1.0 + 1e-8);
  CHECK(net.weights[0][0] == doctest::Approx(2.0 - expected_delta).epsilon(1e-14));
  CHECK(state.w_acc[0][0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("non-finite gradients are rejected with the layer index") {
  auto net = tiny_net(1.0);
  auto grads = nn::GradientBuffer::like(net);
  grads.weights[1][0] = std::numeric_limits<double>::infinity();
  try {
    nn::sgd_step(net, grads, 0.1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("learning rate must be positive") {
  auto net = tiny_net(1.0);
  auto grads = nn::GradientBuffer::like(net);
  CHECK_THROWS_AS(nn::sgd_step(net, grads, 0.0), ConfigError);
  CHECK_THROWS_AS(nn::sgd_step(net, grads, -1.0), ConfigError);
}

TEST_CASE("global-norm clipping caps the gradient norm") {
  auto net = tiny_net(0.0);
  auto grads = nn::GradientBuffer::like(net);
  grads.weights[0][0] = 3.0;
  grads.weights[1][0] = 4.0;
  CHECK(nn::global_grad_norm(grads) == doctest::Approx(5.0));
  nn::clip_grad_norm(grads, 0.5);
  CHECK(nn::global_grad_norm(grads) == doctest::Approx(0.5).epsilon(1e-12));
  // Direction preserved.
  CHECK(grads.weights[0][0] / grads.weights[1][0] == doctest::Approx(0.75));
  // Below the cap: untouched.
  nn::clip_grad_norm(grads, 10.0);
  CHECK(nn::global_grad_norm(grads) == doctest::Approx(0.5).epsilon(1e-12));
}
