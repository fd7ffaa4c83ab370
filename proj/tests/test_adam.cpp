#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gldepth/adam.hpp"
#include "gldepth/errors.hpp"

using namespace gldepth;

TEST_CASE("adam with zero gradient from a fresh state is the identity") {
  ParamSet ps;
  ps.add("w", {4});
  ps[0].value = Tensor::from({4}, {1, -2, 3, 0.5});
  auto st = AdamState::init(ps);
  const Tensor before = ps[0].value;
  adam_step(ps, st);
  CHECK(st.t == 1);
  for (int i = 0; i < 4; ++i) CHECK(ps[0].value(i) == before(i));
  adam_step(ps, st);
  CHECK(st.t == 2);
}

TEST_CASE("adam first step from zero with unit gradient moves by ~ -lr") {
  ParamSet ps;
  ps.add("w", {1});
  ps[0].grad(0) = 1.0;
  auto st = AdamState::init(ps);
  adam_step(ps, st);
  // Bias correction makes mhat/sqrt(vhat) exactly 1 at t=1, up to eps.
  CHECK(std::abs(ps[0].value(0) + 1e-4) < 1e-11);
}

TEST_CASE("adam drives (w-3)^2 to the minimum within 200 steps at lr 0.1") {
  ParamSet ps;
  ps.add("w", {1});
  AdamConfig cfg;
  cfg.lr = 0.1;
  auto st = AdamState::init(ps, cfg);
  for (int i = 0; i < 200; ++i) {
    ps[0].grad(0) = 2.0 * (ps[0].value(0) - 3.0);
    adam_step(ps, st);
  }
  CHECK(std::abs(ps[0].value(0) - 3.0) < 1e-3);
}

TEST_CASE("adam aborts on NaN gradient naming the parameter") {
  ParamSet ps;
  ps.add("enc1.w", {2});
  ps[0].grad(1) = std::nan("");
  auto st = AdamState::init(ps);
  bool threw = false;
  try {
    adam_step(ps, st);
  } catch (const NumericError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("enc1.w") != std::string::npos);
  }
  CHECK(threw);
}
