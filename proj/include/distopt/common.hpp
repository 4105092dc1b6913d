#pragma once

// Shared error type, deterministic RNG, and small dense-matrix helpers used
// across the library. All linear algebra is Eigen double precision.

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace distopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ErrorCode : int {
  config = 2,    // unparseable or inconsistent configuration
  numeric = 3,   // solver failure, non-convergence, non-finite values
  property = 4,  // a checked run property was violated
  invalid = 5,   // precondition / argument violation
  io = 6,        // file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Deterministic RNG. Distribution sampling is hand-rolled from raw engine
// output so that sequences do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {  // Box-Muller, one value per call pair
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  VectorXd normal_vector(int dim) {
    VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[i], v[uniform_int(0, i)]);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline double max_abs(const MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const MatrixXd& m, double tol) {
  return max_abs(m - m.transpose()) <= tol;
}

// a (r x c) -> a ⊗ I_p  (rp x cp)
MatrixXd kron_identity(const MatrixXd& a, int p);

// Block-diagonal assembly; blocks may differ in size but must be square.
MatrixXd block_diag(const std::vector<MatrixXd>& blocks);

// (1/n) 1 1^T ⊗ I_p, the uniform averaging operator on stacked states.
MatrixXd averaging_operator(int n, int p);

// Random orthogonal matrix via Householder QR of a Gaussian sample.
MatrixXd random_orthogonal(int dim, Rng& rng);

// Symmetric matrix with prescribed eigenvalues drawn uniformly in [lo, hi].
MatrixXd random_spd(int dim, double lo, double hi, Rng& rng);

std::string format_double(double v);  // shortest stable "%.17g"

}  // namespace distopt
