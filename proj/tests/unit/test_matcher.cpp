#include <chrono>
#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "ost/bank.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"
#include "ost/matcher.hpp"
#include "support.hpp"

using namespace ost;

namespace {

ClassEmbeddings random_class(Rng& rng, const std::string& name, std::size_t n, std::size_t dim) {
  return {name, test::random_unit(rng, n, dim), test::random_unit(rng, n, dim),
          test::random_unit(rng, 1, dim)};
}

EmbedMatrix permuted(const EmbedMatrix& e, const std::vector<std::size_t>& perm) {
  return EmbedMatrix(test::permute_rows(e.values(), perm), e.unit_norm());
}

EmbedMatrix scaled_rows(Rng& rng, const EmbedMatrix& e) {
  Matrix m = e.values();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double c = 0.1 + 10.0 * rng.uniform();
    for (double& v : m.row(r)) v *= c;
  }
  return EmbedMatrix(std::move(m));
}

void check_same(const ScoreBreakdown& a, const ScoreBreakdown& b, double tol) {
  CHECK(std::abs(a.spatio_pool - b.spatio_pool) <= tol);
  CHECK(std::abs(a.temporal_pool - b.temporal_pool) <= tol);
  CHECK(std::abs(a.spatio_ot - b.spatio_ot) <= tol);
  CHECK(std::abs(a.temporal_ot - b.temporal_ot) <= tol);
  CHECK(std::abs(a.fused - b.fused) <= tol);
}

}  // namespace

TEST_SUITE("matcher") {
  TEST_CASE("category score") {
    const EmbedMatrix cat(Matrix::from_rows({{1, 0}}));
    CHECK(category_score(EmbedMatrix(Matrix::from_rows({{1, 0}, {1, 0}})), cat) == 1.0);
    CHECK(category_score(EmbedMatrix(Matrix::from_rows({{0, 1}, {0, 2}})), cat) == 0.0);
    CHECK(category_score(EmbedMatrix(Matrix::from_rows({{1, 0}, {0, 1}})), cat) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(category_score(EmbedMatrix(Matrix::from_rows({{1, 0}, {-1, 0}})), cat),
                    DegenerateInputError);
    CHECK_THROWS_AS(category_score(EmbedMatrix(Matrix::from_rows({{1, 0, 0}})), cat),
                    DimensionError);
  }

  TEST_CASE("pooled score") {
    const EmbedMatrix frames(Matrix::from_rows({{1, 0}, {0, 1}}));
    CHECK(pooled_score(frames, frames) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pooled_score(frames, EmbedMatrix(Matrix::from_rows({{1, 0}, {-1, 0}}))),
                    DegenerateInputError);
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
      const auto v = test::random_unit(rng, 5, 6);
      const auto d = test::random_unit(rng, 1, 6);
      CHECK(pooled_score(v, d) == category_score(v, d));
    }
  }

  TEST_CASE("ot score fixtures") {
    const EmbedMatrix v(Matrix::from_rows({{1, 0}, {0, 1}}));
    const Matrix plan = Matrix::from_rows({{0.5, 0}, {0, 0.5}});
    CHECK(ot_score(v, v, plan) == 1.0);
    // Constant similarity: any plan gives that constant.
    const EmbedMatrix same(Matrix::from_rows({{0.6, 0.8}, {0.6, 0.8}}));
    const EmbedMatrix d(Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}}));
    const Matrix p = Matrix::from_rows({{0.1, 0.2, 0.2}, {0.3, 0.1, 0.1}});
    CHECK(ot_score(same, d, p) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_THROWS_AS(ot_score(v, v, Matrix(3, 2, 0.1)), DimensionError);
  }

  TEST_CASE("fused logit") {
    CHECK(od_fused_logit(0.2, 0.4, 0.6, 0.8) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(od_fused_logit(0.3, 0.3, 0.3, 0.3) == 0.3);
  }

  TEST_CASE("score_video identity case") {
    Rng rng(2);
    const auto v = test::random_unit(rng, 1, 8);
    Matrix rep(4, 8);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t j = 0; j < 8; ++j) rep(r, j) = v.values()(0, j);
    const EmbedMatrix frames(rep, true);
    const ClassEmbeddings cls{"same", frames, frames, std::nullopt};
    const auto s = score_video(frames, cls);
    CHECK(s.spatio_pool == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.temporal_pool == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.spatio_ot == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.temporal_ot == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.fused == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(s.category.has_value());
  }

  TEST_CASE("score_video matches an independent recomputation") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const auto frames = test::random_unit(rng, 8, 16);
      const auto cls = random_class(rng, "c", 4, 16);
      const auto s = score_video(frames, cls);
      const auto plan_s = sinkhorn_solve(build_cost_matrix(frames, cls.spatio),
                                         Marginals::uniform(8, 4), SolverConfig{});
      const auto plan_t = sinkhorn_solve(build_cost_matrix(frames, cls.temporal),
                                         Marginals::uniform(8, 4), SolverConfig{});
      const double sp = cosine(mean_rows(frames.values()), mean_rows(cls.spatio.values()));
      const double tp = cosine(mean_rows(frames.values()), mean_rows(cls.temporal.values()));
      const double so = ot_score(frames, cls.spatio, plan_s.values);
      const double to = ot_score(frames, cls.temporal, plan_t.values);
      CHECK(s.spatio_pool == doctest::Approx(sp).epsilon(1e-14));
      CHECK(s.temporal_pool == doctest::Approx(tp).epsilon(1e-14));
      CHECK(std::abs(s.spatio_ot - so) <= 1e-14);
      CHECK(std::abs(s.temporal_ot - to) <= 1e-14);
      CHECK(std::abs(s.fused - (sp + tp + so + to) / 4.0) <= 1e-12);
      REQUIRE(s.category.has_value());
      CHECK(*s.category == doctest::Approx(category_score(frames, *cls.category)));
    }
  }

  TEST_CASE("score algebra properties over random instances") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t t = 1 + rng.below(8);
      const std::size_t n = 1 + rng.below(6);
      const std::size_t dim = 2 + rng.below(30);
      const auto frames = test::random_unit(rng, t, dim);
      const auto cls = random_class(rng, "c", n, dim);
      const auto s = score_video(frames, cls);

      for (double x : {s.spatio_pool, s.temporal_pool, s.spatio_ot, s.temporal_ot, s.fused}) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
      }
      CHECK(std::abs(s.fused - od_fused_logit(s.spatio_pool, s.temporal_pool, s.spatio_ot,
                                              s.temporal_ot)) <= 1e-12);

      const Matrix sim = cosine_matrix(frames, cls.spatio);
      const auto [lo, hi] = std::minmax_element(sim.data().begin(), sim.data().end());
      CHECK(s.spatio_ot >= *lo - 1e-12);
      CHECK(s.spatio_ot <= *hi + 1e-12);

      const auto fp = test::random_permutation(rng, t);
      const ClassEmbeddings shuffled{"c", permuted(cls.spatio, test::random_permutation(rng, n)),
                                     permuted(cls.temporal, test::random_permutation(rng, n)),
                                     cls.category};
      check_same(s, score_video(permuted(frames, fp), shuffled), 1e-12);

      const ClassEmbeddings rescaled{"c", scaled_rows(rng, cls.spatio),
                                     scaled_rows(rng, cls.temporal), cls.category};
      // Entrywise cosines ignore row norms; the pooled means do not.
      const auto r = score_video(scaled_rows(rng, frames), rescaled);
      CHECK(std::abs(r.spatio_ot - s.spatio_ot) <= 1e-12);
      CHECK(std::abs(r.temporal_ot - s.temporal_ot) <= 1e-12);
    }
  }

  TEST_CASE("single-frame baseline consistency") {
    // One frame, one descriptor equal to the category embedding: the pooled
    // and transport scores both reduce to the category score.
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto frame = test::random_unit(rng, 1, 12);
      const auto cat = test::random_unit(rng, 1, 12);
      const ClassEmbeddings cls{"c", cat, cat, cat};
      const auto s = score_video(frame, cls);
      const double base = category_score(frame, cat);
      CHECK(std::abs(s.spatio_pool - base) <= 1e-12);
      CHECK(std::abs(s.spatio_ot - base) <= 1e-12);
      CHECK(std::abs(s.fused - base) <= 1e-12);
    }
    // With several frames only the pooled score reduces to it.
    const auto frames = test::random_unit(rng, 6, 12);
    const auto cat = test::random_unit(rng, 1, 12);
    CHECK(std::abs(pooled_score(frames, cat) - category_score(frames, cat)) <= 1e-15);
  }

  TEST_CASE("text-to-video direction") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const auto frames = test::random_unit(rng, 6, 10);
      const auto cls = random_class(rng, "c", 4, 10);
      SolverConfig solver;
      solver.thresh = 1e-12;
      solver.max_iter = 100000;
      const MatchConfig cfg{solver, false};
      check_same(score_video(frames, cls, cfg), score_text_to_video(cls, frames, cfg), 1e-9);
    }
  }

  TEST_CASE("include_category_in_pool appends the category row") {
    Rng rng(7);
    const auto frames = test::random_unit(rng, 4, 6);
    auto cls = random_class(rng, "c", 3, 6);
    MatchConfig cfg;
    cfg.include_category_in_pool = true;
    const auto s = score_video(frames, cls, cfg);
    Matrix stacked(4, 6);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t j = 0; j < 6; ++j) stacked(r, j) = cls.spatio.values()(r, j);
    for (std::size_t j = 0; j < 6; ++j) stacked(3, j) = cls.category->values()(0, j);
    CHECK(s.spatio_pool == doctest::Approx(pooled_score(frames, EmbedMatrix(stacked))));
    CHECK(s.spatio_ot == doctest::Approx(score_video(frames, cls).spatio_ot).epsilon(1e-15));
    cls.category.reset();
    CHECK_THROWS_AS(score_video(frames, cls, cfg), ConfigError);
  }

  TEST_CASE("errors are tagged with the class name") {
    const EmbedMatrix frames(Matrix::from_rows({{1, 0}}));
    const ClassEmbeddings bad{"broken", EmbedMatrix(Matrix::from_rows({{1, 0, 0}})),
                              EmbedMatrix(Matrix::from_rows({{1, 0, 0}})), std::nullopt};
    CHECK_THROWS_WITH_AS(score_video(frames, bad), doctest::Contains("broken"), DimensionError);
  }

  TEST_CASE("classify argmax and tie-break") {
    Rng rng(8);
    const EmbedMatrix frames(Matrix::from_rows({{1, 0, 0}, {1, 0, 0}}));
    const EmbedMatrix hit(Matrix::from_rows({{1, 0, 0}, {1, 0, 0}}));
    const EmbedMatrix miss(Matrix::from_rows({{0, 1, 0}, {0, 0, 1}}));
    const ClassEmbeddings c0{"zero", miss, miss, std::nullopt};
    const ClassEmbeddings c1{"one", hit, hit, std::nullopt};

    const std::vector<ClassEmbeddings> single{c0};
    CHECK(classify(frames, single).argmax_index == 0);

    const std::vector<ClassEmbeddings> two{c0, c1};
    const auto logits = classify(frames, two);
    CHECK(logits.argmax_index == 1);
    CHECK(logits.scores[0].fused == doctest::Approx(0.0));
    CHECK(logits.scores[1].fused == doctest::Approx(1.0));

    const std::vector<ClassEmbeddings> dup{c0, c1, c1};
    CHECK(classify(frames, dup).argmax_index == 1);
    CHECK_THROWS_AS(classify(frames, std::vector<ClassEmbeddings>{}), ConfigError);
  }

  TEST_CASE("top_k_indices") {
    const std::vector<double> v{0.1, 0.5, 0.5, 0.9, 0.2};
    CHECK(top_k_indices(v, 3) == std::vector<std::size_t>{3, 1, 2});
    CHECK(top_k_indices(v, 10).size() == 5);
    CHECK(top_k_indices(v, 0).empty());
  }

  TEST_CASE("load_class_embeddings and JSON output") {
    test::TempDir dir;
    Rng rng(9);
    write_embed_matrix(test::random_unit(rng, 4, 5), dir / "s.oste");
    write_embed_matrix(test::random_unit(rng, 4, 5), dir / "t.oste");
    DescriptorBank bank;
    bank.n_spatio = 1;
    bank.n_temporal = 1;
    bank.template_version = "body-v1";
    bank.classes.push_back({"a", {"x"}, {"y"}, {}, "s.oste", "t.oste", std::nullopt});
    bank.classes.push_back({"b", {"x"}, {"y"}, {}, (dir / "s.oste").string(), std::nullopt,
                            std::nullopt});
    CHECK_THROWS_WITH_AS(load_class_embeddings(bank, dir.path()), doctest::Contains("\"b\""),
                         ConfigError);
    bank.classes[1].temporal_emb_ref = "t.oste";
    const auto classes = load_class_embeddings(bank, dir.path());
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].spatio == classes[1].spatio);
    CHECK_FALSE(classes[0].category.has_value());

    const auto frames = test::random_unit(rng, 3, 5);
    const auto logits = classify(frames, classes);
    const auto doc = nlohmann::json::parse(class_logits_to_json("v.oste", logits));
    CHECK(doc["video"] == "v.oste");
    CHECK(doc["top1"] == "a");
    CHECK(doc["top5"].size() == 2);
    REQUIRE(doc["scores"].size() == 2);
    for (const char* key : {"class", "spatio_pool", "temporal_pool", "spatio_ot", "temporal_ot",
                            "fused"}) {
      CHECK(doc["scores"][0].contains(key));
    }
  }

  TEST_CASE("timing: T=8, N=4 scores one class well under 10 ms") {
    Rng rng(10);
    const auto frames = test::random_unit(rng, 8, 512);
    const auto cls = random_class(rng, "c", 4, 512);
    const auto start = std::chrono::steady_clock::now();
    constexpr int kReps = 50;
    for (int i = 0; i < kReps; ++i) (void)score_video(frames, cls);
    const double per_class_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count() /
        kReps;
    MESSAGE("score_video T=8 N=4 d=512: " << per_class_ms << " ms");
    CHECK(per_class_ms < 10.0);
  }
}
