#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "epr/alphabet.hpp"
#include "epr/random.hpp"
#include "support.hpp"

using namespace epr;
using test::make_dist;
using test::simplex_perturbation;

TEST_CASE("alphabet validation") {
  CHECK_THROWS_AS(Alphabet(1), std::invalid_argument);
  CHECK_THROWS_AS(Alphabet(0), std::invalid_argument);
  CHECK_THROWS_AS(Alphabet(2, {"a"}), std::invalid_argument);
  CHECK_THROWS_AS(Alphabet(2, {"a", "a"}), std::invalid_argument);
  const Alphabet labeled(2, {"heads", "tails"});
  CHECK(labeled.label(0) == "heads");
  CHECK(Alphabet(3).label(2) == "x3");
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(make_dist({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(make_dist({1.2, -0.2}), std::invalid_argument);
  const Distribution u = Distribution::uniform(Alphabet(4));
  CHECK(u(0) == 0.25);
  const Distribution point = Distribution::point_mass(Alphabet(2), 1);
  CHECK(point(0) == 0.0);
  CHECK(point(1) == 1.0);
  CHECK_FALSE(point.strictly_positive());
}

TEST_CASE("info_vector examples") {
  const Distribution p = make_dist({0.5, 0.5});
  const Distribution q = make_dist({0.6, 0.4});
  const InfoVector phi = info_vector(p, q);
  CHECK(phi.coords[0] == Catch::Approx(0.84853).margin(1e-5));
  CHECK(phi.coords[1] == Catch::Approx(0.56569).margin(1e-5));

  const Distribution p2 = make_dist({0.25, 0.75});
  const InfoVector phi2 = info_vector(p2, p2);
  CHECK(phi2.coords[0] == Catch::Approx(0.5).margin(1e-5));
  CHECK(phi2.coords[1] == Catch::Approx(0.86603).margin(1e-5));

  // Q = P maps to phi*(x) = sqrt(P(x)).
  const InfoVector star = reference_info_vector(p2);
  CHECK(star.coords[0] == Catch::Approx(std::sqrt(0.25)));
  CHECK(star.coords[1] == Catch::Approx(std::sqrt(0.75)));
}

TEST_CASE("info_vector errors") {
  const Distribution p = make_dist({0.5, 0.5});
  CHECK_THROWS_AS(info_vector(p, Distribution::point_mass(Alphabet(3), 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(info_vector(Distribution::point_mass(Alphabet(2), 0), p),
                  std::invalid_argument);
}

TEST_CASE("info_vector roundtrip and unit inner product") {
  StreamRng rng({7, 0});
  for (int rep = 0; rep < 200; ++rep) {
    const int size = 2 + static_cast<int>(rng.next_u64() % 7);
    Alphabet alphabet(size);
    Vector pm(size), qm(size);
    for (int x = 0; x < size; ++x) {
      pm[x] = 0.05 + rng.next_uniform();
      qm[x] = rng.next_uniform();
    }
    pm /= pm.sum();
    qm /= qm.sum();
    const Distribution p(alphabet, pm);
    const Distribution q(alphabet, qm);
    const InfoVector phi = info_vector(p, q);

    const Vector back = phi.coords.array() * p.mass().array().sqrt();
    CHECK((back - q.mass()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(phi.coords.dot(p.mass().array().sqrt().matrix()) - 1.0) <= 1e-12);
  }
}

TEST_CASE("kl_local examples") {
  const Distribution p = make_dist({0.5, 0.5});
  const Distribution q = make_dist({0.6, 0.4});
  const InfoVector phi = info_vector(p, q);
  const InfoVector star = reference_info_vector(p);

  CHECK(kl_local(star, star) == 0.0);
  CHECK(kl_local(phi, star) == Catch::Approx(0.02).margin(1e-6));
  CHECK(std::abs(kl_local(phi, star) - kl_divergence(q, p)) < 2e-4);
}

TEST_CASE("kl_local quadratic scaling is exact") {
  const Alphabet alphabet(3);
  const Distribution p = Distribution::uniform(alphabet);
  const InfoVector star = reference_info_vector(p);
  StreamRng rng({11, 0});
  Vector d(3);
  for (int x = 0; x < 3; ++x) d[x] = rng.next_normal();

  const InfoVector one{alphabet, star.coords + d};
  const InfoVector two{alphabet, star.coords + 2.0 * d};
  CHECK(kl_local(two, star) == 4.0 * kl_local(one, star));

  const InfoVector three{alphabet, star.coords + 3.0 * d};
  CHECK(kl_local(three, star) == Catch::Approx(9.0 * kl_local(one, star)).epsilon(1e-14));
}

TEST_CASE("kl_local is a nonnegative distance") {
  const Alphabet alphabet(4);
  const Distribution p = Distribution::uniform(alphabet);
  const InfoVector star = reference_info_vector(p);
  StreamRng rng({13, 0});
  for (int rep = 0; rep < 100; ++rep) {
    Vector d(4);
    for (int x = 0; x < 4; ++x) d[x] = rng.next_normal();
    const InfoVector phi{alphabet, star.coords + d};
    if (d.squaredNorm() > 0) CHECK(kl_local(phi, star) > 0.0);
  }
  CHECK(kl_local(star, star) == 0.0);
}

TEST_CASE("kl_local tracks exact KL to cubic order in the local regime") {
  // Perturbations of Euclidean length eps around uniform references: the
  // sup-norm deviation is at most eps, and the cubic remainder of the
  // half-squared-distance approximation stays within 10 eps^3.
  StreamRng rng({0x10caL, 0});
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int size = 2 + static_cast<int>(rng.next_u64() % 7);
    const Alphabet alphabet(size);
    const Distribution p = Distribution::uniform(alphabet);
    const double eps = std::pow(10.0, -3.0 + rng.next_uniform());  // [1e-3, 1e-2]
    const Vector d = simplex_perturbation(rng, size, eps);
    REQUIRE(d.cwiseAbs().maxCoeff() <= eps * (1 + 1e-12));

    const Distribution q(alphabet, p.mass() + d);
    const double approx = kl_local(info_vector(p, q), reference_info_vector(p));
    const double exact = kl_divergence(q, p);
    const double bound = 10.0 * eps * eps * eps;
    worst_ratio = std::max(worst_ratio, std::abs(approx - exact) / bound);
    REQUIRE(std::abs(approx - exact) <= bound);
  }
  INFO("worst |approx-exact| / bound ratio: " << worst_ratio);
  CHECK(worst_ratio <= 1.0);
}

TEST_CASE("gaussian_log_density examples") {
  const Distribution p = make_dist({0.5, 0.5});
  const InfoVector star = reference_info_vector(p);

  CHECK(gaussian_log_density(star, star, 10.0) ==
        Catch::Approx(-1.0 * std::log(2.0 * std::numbers::pi / 10.0)));
  // Weight chosen so the normalization term vanishes entirely.
  CHECK(gaussian_log_density(star, star, 2.0 * std::numbers::pi) ==
        Catch::Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(gaussian_log_density(star, star, 0.0), std::invalid_argument);

  // Maximized at phi_hat = phi_star.
  StreamRng rng({17, 0});
  for (int rep = 0; rep < 50; ++rep) {
    Vector d(2);
    d << rng.next_normal(), rng.next_normal();
    const InfoVector off{p.alphabet(), star.coords + 0.01 * d};
    if (d.squaredNorm() > 0)
      CHECK(gaussian_log_density(off, star, 25.0) < gaussian_log_density(star, star, 25.0));
  }
}

TEST_CASE("sample_empirical determinism and counts") {
  const Distribution p = make_dist({0.3, 0.45, 0.25});
  const Distribution a = sample_empirical(p, 1000, {42, 5});
  const Distribution b = sample_empirical(p, 1000, {42, 5});
  CHECK(a.mass() == b.mass());

  const Distribution c = sample_empirical(p, 1000, {42, 6});
  CHECK(a.mass() != c.mass());

  CHECK_THROWS_AS(sample_empirical(p, 0, {1, 1}), std::invalid_argument);

  StreamRng rng({19, 0});
  for (int rep = 0; rep < 50; ++rep) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.next_u64() % 5000);
    const Distribution s =
        sample_empirical(p, n, {rng.next_u64(), static_cast<std::uint64_t>(rep)});
    double check_total = 0.0;
    for (int x = 0; x < s.size(); ++x) {
      const double scaled = s(x) * static_cast<double>(n);
      CHECK(std::abs(scaled - std::round(scaled)) <= 1e-9 * static_cast<double>(n));
      CHECK(scaled >= 0.0);
      check_total += std::round(scaled);
    }
    CHECK(check_total == static_cast<double>(n));
  }
}

TEST_CASE("sample_empirical point mass and law of large numbers") {
  const Distribution first = Distribution::point_mass(Alphabet(3), 0);
  CHECK(sample_empirical(first, 17, {3, 3}).mass() == first.mass());
  const Distribution last = Distribution::point_mass(Alphabet(3), 2);
  CHECK(sample_empirical(last, 17, {3, 3}).mass() == last.mass());

  const Distribution fair = make_dist({0.5, 0.5});
  const Distribution emp = sample_empirical(fair, 1000000, {2024, 1});
  CHECK((emp.mass() - fair.mass()).cwiseAbs().maxCoeff() < 0.005);
}
