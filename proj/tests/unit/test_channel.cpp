#include <cmath>
#include <vector>

#include "doctest.h"
#include "v2x/channel.hpp"

using namespace v2x;

namespace {

double to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

std::vector<CoSlotSignal> random_instance(Rng& rng, int n, int n_sub, double noise) {
  std::uniform_real_distribution<double> db(-10.0, 30.0);
  std::uniform_int_distribution<int> sub(0, n_sub - 1);
  std::vector<CoSlotSignal> s;
  for (int k = 0; k < n; ++k) s.push_back({k, noise * std::pow(10.0, db(rng) / 10.0), sub(rng)});
  return s;
}

const auto threshold = [](double sinr) { return sinr >= 1.0; };

}  // namespace

TEST_CASE("thermal noise floor") {
  CHECK(to_dbm(noise_power_w(10e6, 9.0)) == doctest::Approx(-95.0).epsilon(1e-12));
  CHECK(to_dbm(noise_power_w(1.0, 0.0)) == doctest::Approx(-174.0).epsilon(1e-12));
  const double ratio = to_dbm(noise_power_w(20e6, 9.0)) - to_dbm(noise_power_w(10e6, 9.0));
  CHECK(ratio == doctest::Approx(3.0103).epsilon(1e-5));
}

TEST_CASE("log-distance path loss") {
  ChannelParams p;
  CHECK(path_loss(p, 1.0) == doctest::Approx(std::pow(10.0, p.pathloss_ref_db / 10.0)));
  p.pathloss_exponent = 2.0;
  CHECK(10.0 * std::log10(path_loss(p, 10.0) / path_loss(p, 1.0)) == doctest::Approx(20.0));
  ChannelParams q;
  double prev = 0.0;
  for (int d = 1; d <= 500; ++d) {
    const double l = path_loss(q, d);
    CHECK(l >= prev);
    prev = l;
  }
  CHECK(path_loss(q, 0.0) == path_loss(q, 1.0));
  CHECK(path_loss(q, -3.0) == path_loss(q, 1.0));
}

TEST_CASE("free-space reference at 5.9 GHz") {
  CHECK(free_space_loss_1m_db(5.9) == doctest::Approx(47.86).epsilon(1e-3));
}

TEST_CASE("shadowing: zero displacement keeps the value") {
  Rng rng(5);
  ShadowingProcess s(3.0, 25.0, rng);
  const double v = s.value_db();
  CHECK(s.advance(0.0, rng) == v);
}

TEST_CASE("shadowing correlation at one decorrelation distance") {
  Rng rng(11);
  const int n = 20000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    ShadowingProcess s(3.0, 25.0, rng);
    const double x = s.value_db();
    const double y = s.advance(25.0, rng);
    sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double r = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
  CHECK(std::fabs(r - std::exp(-1.0)) <= 0.02);
}

TEST_CASE("shadowing marginal std and autocorrelation") {
  Rng rng(12);
  ShadowingProcess s(3.0, 25.0, rng);
  const int n = 100000;
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = s.advance(5.0, rng);
  double mean = 0.0;
  for (double v : x) mean += v / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean) / (n - 1);
  CHECK(std::fabs(std::sqrt(var) - 3.0) <= 0.1);
  for (int lag_m : {5, 25, 50}) {
    const int lag = lag_m / 5;
    double c = 0.0;
    for (int k = 0; k + lag < n; ++k) c += (x[k] - mean) * (x[k + lag] - mean);
    c /= (n - lag) * var;
    CHECK(std::fabs(c - std::exp(-lag_m / 25.0)) <= 0.05);
  }
}

TEST_CASE("shadowing field is symmetric per pair") {
  ChannelParams p;
  ShadowingField f(4, p, Rng(3));
  const double a = f.gain_db(1, 3, 0.0);
  ShadowingField g(4, p, Rng(3));
  CHECK(g.gain_db(3, 1, 0.0) == a);
  CHECK(f.gain_db(3, 1, 0.0) == a);
}

TEST_CASE("received power is the product of gains") {
  CHECK(rx_power(1.0, {1.0, 1.0, 1.0}) == 1.0);
  const LinkSample l{0.7, 1.3, 1e9};
  CHECK(rx_power(0.4, l) == doctest::Approx(2.0 * rx_power(0.2, l)));
  Rng rng(1);
  std::exponential_distribution<double> e(1.0);
  for (int k = 0; k < 100; ++k) {
    const LinkSample s{std::pow(10.0, e(rng) / 10.0), e(rng), 1e6 * (1.0 + e(rng))};
    const double p = 0.2 * e(rng);
    CHECK(rx_power(p, s) == doctest::Approx(s.small_scale_gain * s.large_scale_gain * p / s.path_loss).epsilon(1e-14));
  }
}

TEST_CASE("interference sums overlap-weighted power") {
  CHECK(interference({}) == 0.0);
  const std::vector<RxPowerEntry> one{{1, 2e-3, 1.0}};
  CHECK(interference(one) == doctest::Approx(2e-3));
  const std::vector<RxPowerEntry> mixed{{1, 2e-3, 1.0}, {2, 5e-3, 0.001}, {3, 7e-3, 0.0}};
  CHECK(interference(mixed) == doctest::Approx(2e-3 + 5e-6));
}

TEST_CASE("plain SINR") {
  const double pn = 1e-12;
  CHECK(sinr_oma(pn, {}, pn) == doctest::Approx(1.0));
  const std::vector<RxPowerEntry> huge{{1, 1e6, 1.0}};
  CHECK(sinr_oma(pn, huge, pn) < 1e-17);
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<RxPowerEntry> e;
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      e.push_back({j, u(rng) * 1e-10, u(rng)});
      sum += e.back().overlap * e.back().rx_power_w;
    }
    const double c = u(rng) * 1e-9;
    CHECK(sinr_oma(c, e, pn) == doctest::Approx(c / (sum + pn)).epsilon(1e-12));
  }
}

TEST_CASE("subchannel overlap") {
  CHECK(overlap_sigma(3, 3, 0.001) == 1.0);
  CHECK(overlap_sigma(3, 5, 0.001) == 0.0);
  CHECK(overlap_sigma(3, 4, ChannelParams{}.adjacent_leakage()) == doctest::Approx(0.001));
}

TEST_CASE("SIC with one message equals plain reception") {
  const std::vector<CoSlotSignal> s{{4, 3e-12, 2}};
  const auto out = sic_decode(s, 1e-12, 0.001, threshold);
  CHECK(out.sinr[0] == doctest::Approx(sinr_oma(3e-12, {}, 1e-12)));
  CHECK(out.decoded[0]);
}

TEST_CASE("SIC two-step cancellation") {
  const double pn = 1e-12;
  const std::vector<CoSlotSignal> s{{0, pn, 1}, {1, 4.0 * pn, 1}};
  const auto out = sic_decode(s, pn, 0.001, threshold);
  CHECK(out.sinr[1] == doctest::Approx(2.0));
  CHECK(out.sinr[0] == doctest::Approx(1.0));
  CHECK(out.decoded[0]);
  CHECK(out.decoded[1]);
}

TEST_CASE("SIC ties are visited by lower transmitter id") {
  const double pn = 1e-12;
  const std::vector<CoSlotSignal> s{{7, 4.0 * pn, 0}, {2, 4.0 * pn, 0}};
  const auto out = sic_decode(s, pn, 0.001, [](double x) { return x >= 0.5; });
  CHECK(out.sinr[1] == doctest::Approx(0.8));
  CHECK(out.sinr[0] == doctest::Approx(4.0));
}

TEST_CASE("a failed strong message stays as interference") {
  const double pn = 1e-12;
  const std::vector<CoSlotSignal> s{{0, 4.0 * pn, 0}, {1, 3.0 * pn, 0}};
  const auto out = sic_decode(s, pn, 0.001, [](double x) { return x >= 5.0; });
  CHECK_FALSE(out.decoded[0]);
  CHECK(out.sinr[1] == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("orthogonal signals are noise limited") {
  const double pn = 1e-12;
  const std::vector<CoSlotSignal> s{{0, 5e-12, 0}, {1, 2e-12, 2}, {2, 9e-12, 4}};
  const auto sic = sic_decode(s, pn, 0.001, threshold);
  const auto oma = oma_decode(s, pn, 0.001);
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(sic.sinr[k] == doctest::Approx(s[k].rx_power_w / pn));
    CHECK(oma[k] == doctest::Approx(s[k].rx_power_w / pn));
  }
}

TEST_CASE("SIC never does worse than plain reception") {
  Rng rng(77);
  const double pn = 1e-13;
  std::uniform_int_distribution<int> count(1, 6);
  for (int inst = 0; inst < 1000; ++inst) {
    const auto s = random_instance(rng, count(rng), 3, pn);
    const auto sic = sic_decode(s, pn, 0.001, threshold);
    const auto oma = oma_decode(s, pn, 0.001);
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(sic.sinr[k] >= oma[k]);
      CHECK(std::isfinite(sic.sinr[k]));
      CHECK(sic.sinr[k] > 0.0);
    }
  }
}

TEST_CASE("removing an interferer never lowers anyone's SINR") {
  Rng rng(78);
  const double pn = 1e-13;
  for (int inst = 0; inst < 500; ++inst) {
    const auto s = random_instance(rng, 5, 2, pn);
    const auto full_sic = sic_decode(s, pn, 0.001, threshold);
    const auto full_oma = oma_decode(s, pn, 0.001);
    for (std::size_t drop = 0; drop < s.size(); ++drop) {
      std::vector<CoSlotSignal> rest;
      std::vector<std::size_t> where;
      for (std::size_t k = 0; k < s.size(); ++k)
        if (k != drop) {
          rest.push_back(s[k]);
          where.push_back(k);
        }
      const auto sic = sic_decode(rest, pn, 0.001, threshold);
      const auto oma = oma_decode(rest, pn, 0.001);
      for (std::size_t k = 0; k < rest.size(); ++k) {
        CHECK(sic.sinr[k] >= full_sic.sinr[where[k]]);
        CHECK(oma[k] >= full_oma[where[k]]);
      }
    }
  }
}
