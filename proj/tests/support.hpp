#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <system_error>
#include <unistd.h>

#include "ost/matrix.hpp"
#include "ost/random.hpp"
#include "ost/types.hpp"

namespace ost::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ost") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Matrix random_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

inline EmbedMatrix random_unit(Rng& rng, std::size_t rows, std::size_t dim) {
  return EmbedMatrix::normalized(random_gaussian(rng, rows, dim));
}

// Random probability vector with entries bounded away from zero.
inline std::vector<double> random_simplex(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double z = 0.0;
  for (double& x : v) z += (x = 0.1 + rng.uniform());
  for (double& x : v) x /= z;
  return v;
}

inline Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(perm[i], j);
  return out;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

// Ten near-duplicate category vectors against ten well-separated classes,
// each with four descriptor rows scattered around its own axis.
struct PlantedDensity {
  EmbedMatrix categories;
  std::vector<EmbedMatrix> descriptors;
};

inline PlantedDensity planted_density_fixture(Rng& rng, std::size_t classes = 10,
                                              std::size_t dim = 16) {
  Matrix cat(classes, dim);
  std::vector<EmbedMatrix> desc;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t j = 0; j < dim; ++j) cat(k, j) = (j == 0 ? 1.0 : 0.0) + 0.05 * rng.normal();
    Matrix d(4, dim);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t j = 0; j < dim; ++j) d(r, j) = (j == k % dim ? 1.0 : 0.0) + 0.2 * rng.normal();
    desc.push_back(EmbedMatrix::normalized(std::move(d)));
  }
  return {EmbedMatrix::normalized(std::move(cat)), std::move(desc)};
}

}  // namespace ost::test
