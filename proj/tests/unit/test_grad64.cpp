#include <gtest/gtest.h>

#include "../support/gradcheck.hpp"

// Linked against the double-precision core: same checks, tighter tolerance.

using namespace smoothrace::nn;

static_assert(gradcheck::kDouble, "this binary must link the 64-bit core");

TEST(Grad64, NetworkLayers) {
  for (Activation act : {Activation::relu, Activation::tanh})
    for (Head head : {Head::gaussian_policy, Head::q_value}) {
      const gradcheck::Report r = gradcheck::network_gradients(act, head, 24, 200 + int(act) * 2 + int(head));
      ASSERT_GE(r.probes.size(), 20u);
      for (const auto& p : r.probes)
        EXPECT_LE(p.rel, 1e-5) << to_string(act) << " " << to_string(head) << " " << p.param << "[" << p.index
                               << "] analytic " << p.analytic << " numeric " << p.numeric;
    }
}

TEST(Grad64, ActorLossWithPenalties) {
  for (bool ir : {false, true}) {
    const gradcheck::Report r = gradcheck::actor_gradients(24, 41, ir);
    ASSERT_GE(r.probes.size(), 20u);
    for (const auto& p : r.probes)
      EXPECT_LE(p.rel, 1e-5) << "ir " << ir << " " << p.param << " analytic " << p.analytic << " numeric "
                             << p.numeric;
  }
}

TEST(Grad64, PenaltyTerm) {
  const gradcheck::Report r = gradcheck::penalty_gradients(24, 43);
  ASSERT_GE(r.probes.size(), 20u);
  EXPECT_LE(r.max_rel, 1e-5);
}
