#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "ost/analysis.hpp"
#include "ost/checkpoint.hpp"
#include "ost/error.hpp"
#include "support.hpp"

using namespace ost;

namespace {

double brute_density(const Matrix& m) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.rows(); ++j, ++n) s += cosine(m.row(i), m.row(j));
  return s / static_cast<double>(n);
}

Matrix scalar(double v) { return Matrix(1, 1, v); }

// Values representable in float32 so the container round trip is bit-exact.
ParamSet random_params(Rng& rng) {
  ParamSet p;
  const std::size_t n = 1 + rng.below(5);
  for (std::size_t e = 0; e < n; ++e) {
    Matrix m(1 + rng.below(6), 1 + rng.below(6));
    for (double& v : m.data()) v = static_cast<float>(100.0 * rng.normal());
    p.add("layer" + std::to_string(e) + (rng.below(2) ? ".weight" : ".bias\xC3\xA9"), std::move(m));
  }
  return p;
}

ParamSet random_pair_partner(Rng& rng, const ParamSet& like) {
  ParamSet p;
  for (const auto& e : like.entries()) {
    Matrix m(e.values.rows(), e.values.cols());
    for (double& v : m.data()) v = rng.normal();
    p.add(e.name, std::move(m));
  }
  return p;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("density fixtures") {
    CHECK(mean_pairwise_cosine(EmbedMatrix(Matrix::from_rows({{1, 2}, {1, 2}}))).mean_pairwise_cosine ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mean_pairwise_cosine(EmbedMatrix(Matrix::from_rows({{1, 0}, {0, 3}}))).mean_pairwise_cosine ==
          0.0);
    const double r = 1.0 / std::sqrt(2.0);
    const auto rep = mean_pairwise_cosine(EmbedMatrix(Matrix::from_rows({{1, 0}, {0, 1}, {r, r}})));
    CHECK(rep.n_items == 3);
    CHECK(rep.mean_pairwise_cosine == doctest::Approx(2.0 * r / 3.0).epsilon(1e-15));
    CHECK(rep.mean_pairwise_cosine == doctest::Approx(0.4714).epsilon(1e-4));
    CHECK(rep.min == 0.0);
    CHECK(rep.max == doctest::Approx(r).epsilon(1e-15));

    const auto j = nlohmann::json::parse(density_report_to_json(rep));
    CHECK(j["n"] == 3);
    CHECK(j["mean"].get<double>() == rep.mean_pairwise_cosine);
    CHECK(j.contains("min"));
    CHECK(j.contains("max"));
  }

  TEST_CASE("density errors") {
    CHECK_THROWS_AS(mean_pairwise_cosine(EmbedMatrix(Matrix::from_rows({{1, 0}}))), ValidationError);
    CHECK_THROWS_AS(mean_pairwise_cosine(EmbedMatrix(Matrix::from_rows({{1, 0}, {0, 0}}))),
                    DegenerateInputError);
  }

  TEST_CASE("density matches brute force and is order and scale invariant") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(40);
      const Matrix m = test::random_gaussian(rng, n, 1 + rng.below(10));
      const double d = mean_pairwise_cosine(EmbedMatrix(m)).mean_pairwise_cosine;
      CHECK(d >= -1.0);
      CHECK(d <= 1.0);
      CHECK(std::abs(d - brute_density(m)) <= 1e-12);
      CHECK(std::abs(d - mean_pairwise_cosine(EmbedMatrix(test::permute_rows(
                                                  m, test::random_permutation(rng, n))))
                             .mean_pairwise_cosine) <= 1e-12);
      Matrix scaled = m;
      for (std::size_t i = 0; i < n; ++i) {
        const double c = 0.01 + 100.0 * rng.uniform();
        for (double& v : scaled.row(i)) v *= c;
      }
      CHECK(std::abs(d - mean_pairwise_cosine(EmbedMatrix(scaled)).mean_pairwise_cosine) <= 1e-12);
      CHECK(mean_pairwise_cosine(EmbedMatrix(m)).mean_pairwise_cosine == d);
    }
  }

  TEST_CASE("density delta") {
    Rng rng(2);
    const auto cat = test::random_unit(rng, 6, 8);
    const auto same = density_delta(cat, cat);
    CHECK(same.before == same.after);

    const auto planted = test::planted_density_fixture(rng);
    const auto d = density_delta(planted.categories, planted.descriptors);
    MESSAGE("planted density: before " << d.before << ", after " << d.after);
    CHECK(d.after < d.before);
    CHECK(d.before > 0.9);

    CHECK_THROWS_AS(density_delta(test::random_unit(rng, 1, 4), test::random_unit(rng, 1, 4)),
                    ValidationError);
  }

  TEST_CASE("ensemble closed forms") {
    ParamSet pre;
    pre.add("w", scalar(1.0));
    ParamSet fine;
    fine.add("w", scalar(0.0));
    CHECK((*weight_space_ensemble(pre, fine, 0.2).find("w"))(0, 0) == 0.2);
    CHECK(*weight_space_ensemble(pre, fine, 0.0).find("w") == scalar(0.0));
    CHECK(*weight_space_ensemble(pre, fine, 1.0).find("w") == scalar(1.0));

    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = random_params(rng);
      const auto b = random_pair_partner(rng, a);
      CHECK(weight_space_ensemble(a, b, 0.0) == b);
      CHECK(weight_space_ensemble(a, b, 1.0) == a);
    }
  }

  TEST_CASE("ensemble properties") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const auto a = random_params(rng);
      const auto b = random_pair_partner(rng, a);
      const double alpha = rng.uniform();
      const auto e = weight_space_ensemble(a, b, alpha);
      const auto swapped = weight_space_ensemble(b, a, 1.0 - alpha);
      const auto e0 = weight_space_ensemble(a, b, 0.0);
      const auto e1 = weight_space_ensemble(a, b, 1.0);
      REQUIRE(e.size() == a.size());
      for (std::size_t k = 0; k < e.size(); ++k) {
        const auto& x = e.entries()[k];
        CHECK(x.name == a.entries()[k].name);
        const auto& y = swapped.entries()[k].values;
        for (std::size_t i = 0; i < x.values.size(); ++i) {
          const double scale = std::max(1.0, std::abs(x.values.data()[i]));
          CHECK(std::abs(x.values.data()[i] - y.data()[i]) <= 1e-15 * scale);
          // Linear in alpha: e(alpha) = alpha e(1) + (1 - alpha) e(0).
          const double lin = alpha * e1.entries()[k].values.data()[i] +
                             (1.0 - alpha) * e0.entries()[k].values.data()[i];
          CHECK(std::abs(x.values.data()[i] - lin) <= 1e-13 * scale);
        }
      }
      // Restricting to a subset commutes with ensembling.
      ParamSet sa, sb;
      for (std::size_t k = 0; k < a.size(); k += 2) {
        sa.add(a.entries()[k].name, a.entries()[k].values);
        sb.add(b.entries()[k].name, b.entries()[k].values);
      }
      const auto sub = weight_space_ensemble(sa, sb, alpha);
      for (const auto& x : sub.entries()) CHECK(x.values == *e.find(x.name));
    }
  }

  TEST_CASE("ensemble errors") {
    ParamSet a;
    a.add("w", Matrix(2, 2, 1.0));
    a.add("b", Matrix(2, 1, 1.0));
    ParamSet shape;
    shape.add("w", Matrix(2, 2, 1.0));
    shape.add("b", Matrix(1, 2, 1.0));
    ParamSet name;
    name.add("w", Matrix(2, 2, 1.0));
    name.add("c", Matrix(2, 1, 1.0));
    ParamSet shorter;
    shorter.add("w", Matrix(2, 2, 1.0));
    for (const ParamSet* other : {&shape, &name, &shorter}) {
      try {
        weight_space_ensemble(a, *other, 0.2);
        FAIL("expected StructuralError");
      } catch (const StructuralError& e) {
        if (other != &shorter) CHECK(std::string(e.what()).find('"') != std::string::npos);
      }
    }
    CHECK_THROWS_AS(weight_space_ensemble(a, a, -0.1), ValidationError);
    CHECK_THROWS_AS(weight_space_ensemble(a, a, 1.5), ValidationError);
    CHECK_THROWS_AS(weight_space_ensemble(a, a, NAN), ValidationError);
    CHECK_THROWS_AS(a.add("w", Matrix(1, 1, 0.0)), ValidationError);
    CHECK_THROWS_AS(a.add("", Matrix(1, 1, 0.0)), ValidationError);
    CHECK_THROWS_AS(a.add("n", Matrix(1, 1, INFINITY)), ValidationError);
  }

  TEST_CASE("OSTP layout") {
    ParamSet p;
    p.add("w", Matrix::from_rows({{0.5}, {-2.0}}));
    const auto bytes = encode_checkpoint(p);
    const std::vector<std::uint8_t> expected{
        'O', 'S', 'T', 'P', 1, 0, 0, 0, 1, 0, 0, 0,  // magic, version, count
        1,   0,   'w',                              // name
        2,   0,   0,   0, 1, 0, 0, 0,               // rows, cols
        0,   0,   0,   0x3F, 0, 0, 0, 0xC0};        // 0.5f, -2.0f
    CHECK(bytes == expected);
  }

  TEST_CASE("OSTP round trip is bit-exact") {
    Rng rng(5);
    test::TempDir dir;
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_params(rng);
      CHECK(decode_checkpoint(encode_checkpoint(p)) == p);
      const auto path = dir / ("p" + std::to_string(trial) + ".ostp");
      write_checkpoint(p, path);
      CHECK(read_checkpoint(path) == p);
    }
  }

  TEST_CASE("OSTP decode errors") {
    ParamSet p;
    p.add("w", Matrix(2, 2, 1.0));
    const auto good = encode_checkpoint(p);
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode_checkpoint(bad_version), FormatError);
    for (std::size_t cut = 0; cut < good.size(); ++cut)
      CHECK_THROWS_AS(decode_checkpoint(std::span(good.data(), cut)), FormatError);
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);
    auto nan_payload = good;
    const float nan = NAN;
    std::memcpy(nan_payload.data() + good.size() - 4, &nan, 4);
    CHECK_THROWS_AS(decode_checkpoint(nan_payload), FormatError);
    auto dup = good;
    dup[8] = 2;
    dup.insert(dup.end(), good.begin() + 12, good.end());
    CHECK_THROWS_AS(decode_checkpoint(dup), FormatError);

    ParamSet big;
    big.add("w", scalar(1e300));
    CHECK_THROWS_AS(encode_checkpoint(big), ValidationError);
    test::TempDir dir;
    CHECK_THROWS_AS(read_checkpoint(dir / "missing.ostp"), IoError);
    std::ofstream(dir / "junk.ostp") << "junk";
    try {
      read_checkpoint(dir / "junk.ostp");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("junk.ostp") != std::string::npos);
    }
  }
}
