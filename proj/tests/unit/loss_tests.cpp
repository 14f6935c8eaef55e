#include <doctest.h>

#include <cmath>

#include "geotr/loss.hpp"

using namespace geotr;

TEST_SUITE("loss") {

TEST_CASE("perfect predictions cost zero") {
  Tensor probs({2, 3});
  probs.data = {1, 0, 0, 0, 0, 1};
  CHECK(cce_loss(probs, {0, 2}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("uniform predictions over the 8x10 grid cost 0.8 ln 10") {
  Tensor probs({8, 10});
  probs.fill(0.1f);
  std::vector<int> labels = {0, 1, 2, 3, 4, 5, 6, 7};
  CHECK(cce_loss(probs, labels) ==
        doctest::Approx(1.842068074395237).epsilon(1e-6));
}

TEST_CASE("average runs over classes, not slots") {
  // One slot, three classes, p(label)=1/e: loss = -ln(1/e)/3 = 1/3.
  Tensor probs({1, 3});
  const float pe = static_cast<float>(1.0 / std::exp(1.0));
  probs.data = {pe, 1.0f - pe - 0.1f, 0.1f};
  CHECK(cce_loss(probs, {0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("probability floor keeps tiny values finite") {
  Tensor probs({1, 2});
  probs.data = {1e-20f, 1.0f};
  const double loss = cce_loss(probs, {0});
  CHECK(std::isfinite(loss));
  // Floored at 1e-12: loss = -ln(1e-12)/2.
  CHECK(loss == doctest::Approx(-std::log(1e-12) / 2.0).epsilon(1e-6));
}

TEST_CASE("gradient hits only the label entry") {
  Tensor probs({2, 4});
  probs.data = {.1f, .2f, .3f, .4f, .25f, .25f, .25f, .25f};
  Tensor g = cce_backward(probs, {2, 0});
  CHECK(g.at(0, 0) == 0.0f);
  CHECK(g.at(0, 1) == 0.0f);
  CHECK(g.at(0, 2) == doctest::Approx(-1.0 / (0.3 * 4)).epsilon(1e-5));
  CHECK(g.at(0, 3) == 0.0f);
  CHECK(g.at(1, 0) == doctest::Approx(-1.0 / (0.25 * 4)).epsilon(1e-5));
}

TEST_CASE("label bounds are enforced") {
  Tensor probs({2, 3});
  probs.fill(1.0f / 3);
  CHECK_THROWS_AS(cce_loss(probs, {0, 3}), IndexError);
  CHECK_THROWS_AS(cce_loss(probs, {-1, 0}), IndexError);
  CHECK_THROWS_AS(cce_loss(probs, {0}), DimensionError);  // label count
  CHECK_THROWS_AS(cce_backward(probs, {0, 3}), IndexError);
}

}  // TEST_SUITE
