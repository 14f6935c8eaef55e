#include <doctest.h>

#include <cmath>

#include "geotr/lstm.hpp"
#include "geotr/rng.hpp"

using namespace geotr;

TEST_SUITE("lstm") {

TEST_CASE("single step matches hand-computed gate arithmetic") {
  // I=2, H=2, gate rows ordered i,f,g,o; values frozen from a manual
  // evaluation of the cell equations.
  BasicLstmParams<double> p(2, 2);
  p.wx.data = {.1,  .2,  .3, .4,   // i
               -.1, .5,  .2, -.3,  // f
               .4,  .1,  -.2, .2,  // g
               .3,  -.1, .1, .2};  // o
  p.wh.data = {.05, -.05, .1,  .02, -.03, .07, .06, .01,
               .02, .02,  -.04, .03, .08,  -.02, .01, .09};
  p.b.data = {.1, .2, 1.0, 1.1, -.2, -.1, .3, .4};

  DTensor x({2}), h0({2}), c0({2});
  x.data = {0.5, -1.0};
  h0.data = {0.1, -0.2};
  c0.data = {0.3, 0.05};

  auto [h1, c1] = lstm_step(x, h0, c0, p);
  CHECK(h1.data[0] == doctest::Approx(0.0836144312).epsilon(1e-8));
  CHECK(h1.data[1] == doctest::Approx(-0.0825605358).epsilon(1e-8));
  CHECK(c1.data[0] == doctest::Approx(0.1320424057).epsilon(1e-8));
  CHECK(c1.data[1] == doctest::Approx(-0.1490553147).epsilon(1e-8));
}

TEST_CASE("zero weights, zero state: step stays at zero") {
  BasicLstmParams<double> p(3, 4);
  p.wx.fill(0.0);
  p.wh.fill(0.0);
  p.b.fill(0.0);
  DTensor x({3}), h0({4}), c0({4});
  x.data = {1.0, -2.0, 3.0};
  auto [h1, c1] = lstm_step(x, h0, c0, p);
  // All gates sit at sigmoid(0)=0.5, candidate tanh(0)=0, so the cell and
  // hidden state never move.
  for (double v : h1.data) CHECK(v == doctest::Approx(0.0));
  for (double v : c1.data) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("init sets the forget-gate bias block to one") {
  BasicLstmParams<float> p(5, 7);
  Rng rng(3);
  init_lstm(p, rng);
  for (int j = 0; j < 7; ++j) {
    CHECK(p.b.data[j] == 0.0f);            // input gate
    CHECK(p.b.data[7 + j] == 1.0f);        // forget gate
    CHECK(p.b.data[2 * 7 + j] == 0.0f);    // candidate
    CHECK(p.b.data[3 * 7 + j] == 0.0f);    // output gate
  }
  // Glorot range for wx: |v| <= sqrt(6/(I+4H)).
  const float bound = std::sqrt(6.0f / (5 + 4 * 7));
  for (float v : p.wx.data) {
    CHECK(v >= -bound);
    CHECK(v <= bound);
  }
}

TEST_CASE("sequence forward equals repeated single steps") {
  Rng rng(61);
  BasicLstmParams<double> p(3, 4);
  init_lstm(p, rng);
  const int steps = 6;
  DTensor xt({steps, 3});
  for (double& v : xt.data) v = rng.uniform(-1, 1);

  DTensor h_seq = lstm_seq_forward(xt, p);

  DTensor h({4}), c({4});
  for (int t = 0; t < steps; ++t) {
    DTensor x({3});
    for (int i = 0; i < 3; ++i) x.data[i] = xt.at(t, i);
    auto [h2, c2] = lstm_step(x, h, c, p);
    h = h2;
    c = c2;
    for (int j = 0; j < 4; ++j)
      CHECK(h_seq.at(t, j) == doctest::Approx(h.data[j]).epsilon(1e-9));
  }
}

TEST_CASE("sequence forward tracks the step oracle on 100 random draws") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const int in = 1 + static_cast<int>(rng.below(5));
    const int hidden = 1 + static_cast<int>(rng.below(5));
    const int steps = 1 + static_cast<int>(rng.below(7));
    BasicLstmParams<double> p(in, hidden);
    init_lstm(p, rng);
    DTensor xt({steps, in});
    for (double& v : xt.data) v = rng.uniform(-2, 2);

    DTensor h_seq = lstm_seq_forward(xt, p);
    DTensor h({hidden}), c({hidden});
    for (int t = 0; t < steps; ++t) {
      DTensor x({in});
      for (int i = 0; i < in; ++i) x.data[i] = xt.at(t, i);
      auto [h2, c2] = lstm_step(x, h, c, p);
      h = h2;
      c = c2;
      for (int j = 0; j < hidden; ++j)
        CHECK(h_seq.at(t, j) == doctest::Approx(h.data[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("step rejects mismatched sizes") {
  BasicLstmParams<double> p(3, 4);
  p.wx.fill(0.0);
  p.wh.fill(0.0);
  p.b.fill(0.0);
  DTensor x_bad({2}), h({4}), c({4}), x({3}), h_bad({5});
  CHECK_THROWS_AS(lstm_step(x_bad, h, c, p), DimensionError);
  CHECK_THROWS_AS(lstm_step(x, h_bad, c, p), DimensionError);
}

TEST_CASE("reverse_rows flips row order") {
  DTensor a({3, 2});
  a.data = {1, 2, 3, 4, 5, 6};
  DTensor r = reverse_rows(a);
  CHECK(r.at(0, 0) == 5);
  CHECK(r.at(0, 1) == 6);
  CHECK(r.at(2, 0) == 1);
  DTensor rr = reverse_rows(r);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(rr.data[i] == a.data[i]);
}

TEST_CASE("bilstm halves are the two directional passes") {
  Rng rng(67);
  BasicLstmParams<double> fwd(3, 4), bwd(3, 4);
  init_lstm(fwd, rng);
  init_lstm(bwd, rng);
  const int steps = 5;
  DTensor cols({3, steps});  // channels-first, like pixel columns
  for (double& v : cols.data) v = rng.uniform(-1, 1);

  DTensor out = bilstm_forward(cols, fwd, bwd);  // [2H x T]
  REQUIRE(out.dim(0) == 8);
  REQUIRE(out.dim(1) == steps);

  DTensor xt = transpose(cols);
  DTensor f_seq = lstm_seq_forward(xt, fwd);
  DTensor b_seq = reverse_rows(lstm_seq_forward(reverse_rows(xt), bwd));
  for (int t = 0; t < steps; ++t)
    for (int j = 0; j < 4; ++j) {
      CHECK(out.at(j, t) == doctest::Approx(f_seq.at(t, j)).epsilon(1e-12));
      CHECK(out.at(4 + j, t) ==
            doctest::Approx(b_seq.at(t, j)).epsilon(1e-12));
    }
}

}  // TEST_SUITE
