#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lba/embedding.hpp"
#include "gradcheck.hpp"

using namespace lba;

TEST_CASE("cosine") {
  CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == doctest::Approx(0.0));
  CHECK(cosine(Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 4)) == doctest::Approx(1.0));
  CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1)) == doctest::Approx(0.70710678));
  CHECK_THROWS_AS(cosine(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)), Error);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    Vector u(6), v(6);
    for (int j = 0; j < 6; ++j) {
      u[j] = g(rng);
      v[j] = g(rng);
    }
    const double c = cosine(u, v);
    CHECK(std::abs(c) <= 1.0 + 1e-12);
    CHECK(c == doctest::Approx(cosine(v, u)).epsilon(1e-12));
    CHECK(c == doctest::Approx(cosine(Vector(scale(rng) * u), v)).epsilon(1e-12));
  }
}

TEST_CASE("confidence") {
  CHECK(confidence(0.0, 10.0) == 0.5);
  CHECK(confidence(0.0, 0.37) == 0.5);
  CHECK(confidence(0.2, 10.0) == doctest::Approx(0.88079708).epsilon(1e-8));
  CHECK(confidence(-1.0, 10.0) == doctest::Approx(4.5398e-5).epsilon(1e-4));
  double prev = 0.0;
  for (double s = -1.0; s <= 1.0; s += 0.01) {
    const double c = confidence(s, 10.0);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("encode_object") {
  const Projection id = make_projection(4, 4, 1);
  Vector unit(4);
  unit << 0.5, 0.5, 0.5, 0.5;
  CHECK(encode_object(id, unit).isApprox(unit));
  Vector raw(4);
  raw << 3, 4, 0, 0;
  const Vector z = encode_object(id, raw);
  CHECK(z[0] == doctest::Approx(0.6));
  CHECK(z[1] == doctest::Approx(0.8));
  CHECK(z[2] == 0.0);
  CHECK_THROWS_AS(encode_object(id, Vector::Zero(4)), Error);
  CHECK_THROWS_AS(encode_object(id, Vector::Ones(3)), Error);

  const Projection noisy = make_projection(4, 4, 9, 0.5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    Vector r(4);
    for (int j = 0; j < 4; ++j) r[j] = g(rng);
    CHECK(encode_object(noisy, r).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("concept table") {
  const ConceptTable a(42, 32);
  const ConceptTable b(42, 32);
  const Vector v = a.vector("IsA", "mammal");
  CHECK(std::abs(v.norm() - 1.0) < 1e-9);
  CHECK(v == b.vector("IsA", "mammal"));
  CHECK(v == a.encode(MaskedTriplet::confirmation("IsA", "mammal")));
  CHECK(v == a.vector("isa", " Mammal"));
  CHECK(v != a.vector("IsA", "reptile"));
  CHECK(v != ConceptTable(43, 32).vector("IsA", "mammal"));
  CHECK_THROWS_WITH_AS(a.encode(MaskedTriplet::exploration("UsedFor")),
                       "knowledge feature undefined for fully masked pattern", Error);
}

TEST_CASE("bce loss examples") {
  // One knowledge row per target similarity; the object feature is e0.
  auto setup = [](std::vector<double> sims, std::vector<double> labels, double tau) {
    const Eigen::Index n = static_cast<Eigen::Index>(sims.size());
    Matrix K(n, 2);
    std::vector<LabeledItem> items;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sims[static_cast<std::size_t>(i)];
      K.row(i) << s, std::sqrt(1.0 - s * s);
      items.push_back({i, labels[static_cast<std::size_t>(i)]});
    }
    Projection p = make_projection(2, 2, 0);
    p.temperature = tau;
    return std::tuple{p, K, items};
  };
  Vector raw(2);
  raw << 1, 0;

  {
    auto [p, K, items] = setup({0.0}, {1.0}, 10.0);
    CHECK(bce_loss(p, raw, K, items) == doctest::Approx(0.69314718).epsilon(1e-8));
  }
  {
    auto [p, K, items] = setup({1.0}, {1.0}, 50.0);
    CHECK(bce_loss(p, raw, K, items) < 1e-20);
  }
  {
    // sigma = 0.8 and 0.2 need tau * sim = +-ln 4.
    const double s = 0.5;
    auto [p, K, items] = setup({s, -s}, {1.0, 0.0}, std::log(4.0) / s);
    CHECK(bce_loss(p, raw, K, items) == doctest::Approx(0.44628710).epsilon(1e-8));
  }
  {
    auto [p, K, items] = setup({0.3, -0.7, 0.9}, {0.0, 1.0, 0.0}, 10.0);
    CHECK(bce_loss(p, raw, K, items) >= 0.0);
  }
}

TEST_CASE("gradient vanishes at a saturated minimum") {
  Matrix K(2, 2);
  K << 1, 0, -1, 0;
  Vector raw(2);
  raw << 1, 0;
  Projection p = make_projection(2, 2, 0);
  p.temperature = 1000.0;
  const std::vector<Example> batch{{raw, {{0, 1.0}, {1, 0.0}}}};
  const Projection before = p;
  train_step(p, batch, K, 0.05);
  CHECK((p.weights - before.weights).norm() < 1e-8);
}

TEST_CASE("analytic gradient matches finite differences on a 4-dim toy") {
  std::mt19937_64 rng(17);
  const auto cfg = testing::random_config(rng, 4, 4, 5, 3);
  CHECK(testing::gradient_relative_error(cfg.proj, cfg.batch, cfg.knowledge) < 1e-4);
}

TEST_CASE("gradient check over 100 random configurations") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto cfg = testing::random_config(rng, 8, 8, 6, 4);
    worst = std::max(worst, testing::gradient_relative_error(cfg.proj, cfg.batch, cfg.knowledge));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("training lowers loss on a separable toy world") {
  // Eight objects, each aligned with one of eight orthogonal knowledge rows.
  const Matrix K = Matrix::Identity(8, 8);
  std::vector<Example> batch;
  for (Eigen::Index i = 0; i < 8; ++i) {
    Example e;
    e.raw = Vector::Constant(8, 0.2);
    e.raw[i] = 1.0;
    for (Eigen::Index j = 0; j < 8; ++j) e.items.push_back({j, i == j ? 1.0 : 0.0});
    batch.push_back(e);
  }
  Projection p = make_projection(8, 8, 4, 0.3, 1.0);
  const double initial = batch_loss(p, batch, K);
  for (int s = 0; s < 200; ++s) train_step(p, batch, K, 0.05);
  CHECK(batch_loss(p, batch, K) < initial);
  CHECK(p.temperature >= kMinTemperature);

  CHECK_THROWS_AS(train_step(p, {}, K, 0.05), Error);
  CHECK_THROWS_AS(train_step(p, batch, K, 0.0), Error);
}

TEST_CASE("checkpoint round trip") {
  Projection p = make_projection(5, 3, 77, 0.4, 7.123456789012345);
  p.weights(1, 2) = 1.0 / 3.0;
  std::stringstream buf;
  write_projection(buf, p);
  CHECK(buf.str().rfind("lba-projection v1\n", 0) == 0);
  const Projection q = read_projection(buf);
  CHECK(q == p);

  std::istringstream bad("lba-projection v9\n");
  CHECK_THROWS_AS(read_projection(bad), Error);
}
