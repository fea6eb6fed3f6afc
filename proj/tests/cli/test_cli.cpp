#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ost/checkpoint.hpp"
#include "ost/embed_io.hpp"
#include "support.hpp"

using namespace ost;
using json = nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with stdout and stderr captured in files under `dir`.
RunResult run(const test::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + OST_CLI_PATH + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write_classes(const std::filesystem::path& p, const std::vector<std::string>& names) {
  std::ofstream out(p);
  for (const auto& n : names) out << n << '\n';
}

}  // namespace

TEST_CASE("gen with the mock client") {
  test::TempDir dir;
  write_classes(dir / "classes.txt", {"ski jumping", "zumba"});
  const auto r = run(dir, "gen --mock --classes " + q(dir / "classes.txt") + " --n 4 --out " +
                              q(dir / "bank.json") + " --cache " + q(dir / "cache"));
  REQUIRE(r.exit_code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["classes"] == 2);
  CHECK(doc["llm_calls"] == 4);
  const auto bank = json::parse(slurp(dir / "bank.json"));
  CHECK(bank["classes"].size() == 2);
  CHECK(bank["n_spatio"] == 4);
  const std::string first = slurp(dir / "bank.json");

  const auto warm = run(dir, "gen --mock --classes " + q(dir / "classes.txt") + " --n 4 --out " +
                                 q(dir / "bank2.json") + " --cache " + q(dir / "cache"));
  REQUIRE(warm.exit_code == 0);
  CHECK(json::parse(warm.out)["llm_calls"] == 0);
  CHECK(slurp(dir / "bank2.json") == first);

  const auto supp = run(dir, "gen --mock --template supp-v1 --classes " + q(dir / "classes.txt") +
                                 " --out " + q(dir / "bank3.json"));
  REQUIRE(supp.exit_code == 0);
  CHECK(json::parse(slurp(dir / "bank3.json"))["template_version"] == "supp-v1");
}

TEST_CASE("gen failures") {
  test::TempDir dir;
  const auto r = run(dir, "gen --mock --classes " + q(dir / "missing.txt") + " --out " +
                              q(dir / "bank.json"));
  CHECK(r.exit_code == 2);
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(std::filesystem::exists(dir / "bank.json"));

  write_classes(dir / "dup.txt", {"a", "a"});
  CHECK(run(dir, "gen --mock --classes " + q(dir / "dup.txt") + " --out " + q(dir / "bank.json"))
            .exit_code == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "bank.json"));
  CHECK(run(dir, "gen --mock --template v7 --classes " + q(dir / "dup.txt") + " --out x")
            .exit_code == 2);
  CHECK(run(dir, "").exit_code == 2);
  CHECK(run(dir, "frobnicate").exit_code == 2);
}

TEST_CASE("solve") {
  test::TempDir dir;
  write_embed_matrix(EmbedMatrix(Matrix(2, 4, 0.7)), dir / "const.oste");
  const auto r = run(dir, "solve --cost " + q(dir / "const.oste") + " --out " + q(dir / "p.oste"));
  REQUIRE(r.exit_code == 0);
  const auto plan = read_embed_matrix(dir / "p.oste");
  REQUIRE(plan.rows() == 2);
  REQUIRE(plan.dim() == 4);
  for (double v : plan.values().data()) CHECK(std::abs(v - 0.125) <= 1e-9);
  const auto side = json::parse(slurp(dir / "p.oste.json"));
  CHECK(side["converged"] == true);
  CHECK(side == json::parse(r.out));

  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{0, 1}, {1, 0}})), dir / "two.oste");
  REQUIRE(run(dir, "solve --cost " + q(dir / "two.oste") + " --out " + q(dir / "p2.oste"))
              .exit_code == 0);
  const auto side2 = json::parse(slurp(dir / "p2.oste.json"));
  CHECK(side2["converged"] == true);
  CHECK(side2["iterations"].get<int>() <= 100);
  CHECK(side2["domain"] == "kernel");
  CHECK(std::abs(read_embed_matrix(dir / "p2.oste").values()(0, 0) - 0.4999773) < 1e-6);
  CHECK(side2["omega"] == 1.0);

  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{0.0879, 1.9719}, {1.199, 0.804}})),
                     dir / "slow.oste");
  const auto slow = run(dir, "--thresh 1e-9 --max-iter 10000 --overrelax solve --cost " +
                                 q(dir / "slow.oste") + " --out " + q(dir / "p3.oste"));
  REQUIRE(slow.exit_code == 0);
  CHECK(json::parse(slow.out)["converged"] == true);
  CHECK(json::parse(slow.out)["omega"].get<double>() > 1.0);

  CHECK(run(dir, "--lambda 0 solve --cost " + q(dir / "two.oste") + " --out " + q(dir / "x.oste"))
            .exit_code == 2);
  CHECK(run(dir, "solve --lambda -1 --cost " + q(dir / "two.oste") + " --out " +
                     q(dir / "x.oste"))
            .exit_code == 2);
  CHECK(run(dir, "solve --cost " + q(dir / "nope.oste") + " --out " + q(dir / "x.oste"))
            .exit_code == 4);
  // Kernel-domain underflow is a numeric failure; the log domain handles it.
  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{0.8, 0.9}, {0, 2}})), dir / "hard.oste");
  CHECK(run(dir, "--lambda 0.001 solve --cost " + q(dir / "hard.oste") + " --out " +
                     q(dir / "x.oste"))
            .exit_code == 3);
  CHECK(run(dir, "--lambda 0.001 --log-domain solve --cost " + q(dir / "hard.oste") + " --out " +
                     q(dir / "x.oste"))
            .exit_code == 0);
}

TEST_CASE("oracle") {
  test::TempDir dir;
  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{0, 1}, {1, 0}})), dir / "c.oste");
  const auto r = run(dir, "oracle --compare --cost " + q(dir / "c.oste"));
  REQUIRE(r.exit_code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["cost"].get<double>() == 0.0);
  CHECK(doc["gap"].get<double>() >= -1e-12);
  CHECK(doc["gap"].get<double>() < 1e-3);
  write_embed_matrix(EmbedMatrix(Matrix(9, 8, 1.0)), dir / "big.oste");
  CHECK(run(dir, "oracle --cost " + q(dir / "big.oste")).exit_code == 3);
}

TEST_CASE("synth, eval and score") {
  test::TempDir dir;
  const auto s = run(dir, "--seed 42 synth --out " + q(dir / "bench"));
  REQUIRE(s.exit_code == 0);
  CHECK(json::parse(s.out)["n_items"] == 200);

  const auto e = run(dir, "eval --manifest " + q(dir / "bench" / "manifest.json"));
  REQUIRE(e.exit_code == 0);
  const auto doc = json::parse(e.out);
  for (const char* mode : {"category", "pooled", "od"}) CHECK(doc[mode].contains("top1"));
  CHECK(doc["od"]["top1"].get<double>() > doc["pooled"]["top1"].get<double>());
  CHECK(doc["pooled"]["top1"].get<double>() > doc["category"]["top1"].get<double>());

  const auto od = run(dir, "--jobs 3 eval --mode od --manifest " + q(dir / "bench" / "manifest.json"));
  REQUIRE(od.exit_code == 0);
  CHECK(json::parse(od.out) == doc["od"]);

  const auto sc = run(dir, "score --frames " + q(dir / "bench" / "items" / "c03_i000.oste") +
                               " --bank " + q(dir / "bench" / "bank.json"));
  REQUIRE(sc.exit_code == 0);
  const auto logits = json::parse(sc.out);
  CHECK(logits["scores"].size() == 10);
  CHECK(run(dir, "score --t2v --frames " + q(dir / "bench" / "items" / "c03_i000.oste") +
                     " --bank " + q(dir / "bench" / "bank.json"))
            .exit_code == 0);

  CHECK(run(dir, "eval --mode best --manifest " + q(dir / "bench" / "manifest.json")).exit_code ==
        2);
  std::ofstream(dir / "bad.json") << "{\"bank\": 1}";
  CHECK(run(dir, "eval --manifest " + q(dir / "bad.json")).exit_code == 2);
}

TEST_CASE("density") {
  test::TempDir dir;
  const double r = 1.0 / std::sqrt(2.0);
  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{1, 0}, {0, 1}, {r, r}})), dir / "e.oste");
  const auto d = run(dir, "density --emb " + q(dir / "e.oste"));
  REQUIRE(d.exit_code == 0);
  CHECK(std::abs(json::parse(d.out)["mean"].get<double>() - 0.4714) < 1e-4);

  Rng rng(1);
  const auto planted = test::planted_density_fixture(rng);
  Matrix pooled(planted.descriptors.size(), planted.categories.dim());
  for (std::size_t k = 0; k < planted.descriptors.size(); ++k)
    for (std::size_t r2 = 0; r2 < planted.descriptors[k].rows(); ++r2)
      for (std::size_t j = 0; j < pooled.cols(); ++j)
        pooled(k, j) += planted.descriptors[k].values()(r2, j);
  write_embed_matrix(planted.categories, dir / "cat.oste");
  write_embed_matrix(EmbedMatrix(pooled), dir / "desc.oste");
  const auto delta = run(dir, "density --category " + q(dir / "cat.oste") + " --descriptors " +
                                  q(dir / "desc.oste"));
  REQUIRE(delta.exit_code == 0);
  const auto doc = json::parse(delta.out);
  CHECK(doc["after"].get<double>() < doc["before"].get<double>());
  CHECK(run(dir, "density").exit_code == 2);
}

TEST_CASE("ensemble") {
  test::TempDir dir;
  ParamSet a;
  a.add("w", Matrix(1, 1, 1.0));
  ParamSet b;
  b.add("w", Matrix(1, 1, 0.0));
  write_checkpoint(a, dir / "a.ostp");
  write_checkpoint(b, dir / "b.ostp");
  const auto r = run(dir, "ensemble --a " + q(dir / "a.ostp") + " --b " + q(dir / "b.ostp") +
                              " --alpha 0.2 --out " + q(dir / "c.ostp"));
  REQUIRE(r.exit_code == 0);
  CHECK(read_checkpoint(dir / "c.ostp").find("w")->data()[0] == static_cast<double>(0.2f));

  REQUIRE(run(dir, "ensemble --swap --a " + q(dir / "b.ostp") + " --b " + q(dir / "a.ostp") +
                       " --alpha 0.8 --out " + q(dir / "d.ostp"))
              .exit_code == 0);
  CHECK(slurp(dir / "d.ostp") == slurp(dir / "c.ostp"));

  ParamSet other;
  other.add("v", Matrix(1, 1, 0.0));
  write_checkpoint(other, dir / "o.ostp");
  CHECK(run(dir, "ensemble --a " + q(dir / "a.ostp") + " --b " + q(dir / "o.ostp") +
                     " --out " + q(dir / "e.ostp"))
            .exit_code == 3);
  CHECK(run(dir, "ensemble --alpha 1.5 --a " + q(dir / "a.ostp") + " --b " + q(dir / "b.ostp") +
                     " --out " + q(dir / "e.ostp"))
            .exit_code == 2);
}

TEST_CASE("loss-check") {
  test::TempDir dir;
  const auto r = run(dir, "loss-check");
  REQUIRE(r.exit_code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["pass"] == true);
  CHECK(doc["max_rel_error"].get<double>() < 1e-4);
  CHECK(doc["batches"] == 50);
}

TEST_CASE("quiet keeps stderr empty") {
  test::TempDir dir;
  write_embed_matrix(EmbedMatrix(Matrix::from_rows({{0, 1}, {1, 0}})), dir / "c.oste");
  const auto r = run(dir, "-q solve --cost " + q(dir / "c.oste") + " --out " + q(dir / "p.oste"));
  CHECK(r.exit_code == 0);
  CHECK(r.err.empty());
}
