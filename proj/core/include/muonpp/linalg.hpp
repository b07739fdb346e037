#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace muonpp::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws InvalidInput when `m` is empty or holds NaN/Inf. `what` names the argument.
void require_finite(const Matrix& m, std::string_view what);
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

/// Frobenius inner product tr(A^T B).
double inner(const Matrix& a, const Matrix& b);

/// Top two singular values of a matrix together with the leading singular pair.
struct SingularInfo {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  Vector u1;
  Vector v1;
  double gap = 0.0;  // sigma1 - sigma2
  bool converged = false;
  /// max of the leading and deflated relative residuals, ||M^T u - sigma v|| / sigma1
  double residual = 0.0;
  int iterations = 0;
};

struct PowerIterationOptions {
  double tol = 1e-10;
  int max_iter = 5000;
  /// Optional start vectors (length cols) for the leading and deflated runs.
  /// Empty means the deterministic default start.
  Vector start_v1;
  Vector start_v2;
};

/// Deflated power iteration on the Gram operator M^T M.
///
/// (sigma1, u1, v1) is computed first, then the iteration is repeated on
/// M - sigma1 u1 v1^T for sigma2. The sign of the pair is fixed so that the first
/// non-zero coordinate of u1 is positive.
SingularInfo top_two_singular(const Matrix& m, const PowerIterationOptions& options);
SingularInfo top_two_singular(const Matrix& m, double tol = 1e-10, int max_iter = 5000);

/// Thin singular value decomposition, singular values sorted descending.
struct Svd {
  Matrix u;      // rows x k
  Vector sigma;  // k = min(rows, cols)
  Matrix v;      // cols x k
};

/// One-sided (Hestenes) Jacobi SVD. Intended for matrices up to 512 x 512.
Svd jacobi_svd(const Matrix& m);

/// Singular values below this fraction of sigma1 are treated as exact zeros.
double rank_threshold(const Matrix& m, double sigma1);

enum class MsignMode { exact, iterative };

struct MsignResult {
  Matrix value;
  /// Frobenius norm of the last Newton-Schulz correction (0 for exact mode).
  double residual = 0.0;
};

/// Matrix sign / polar factor U V^T. Zero singular values contribute zero and
/// msign(0) = 0. Iterative mode runs X <- 1.5 X - 0.5 X X^T X on M / ||M||_F.
MsignResult msign_with_residual(const Matrix& m, MsignMode mode = MsignMode::exact, int steps = 30);
Matrix msign(const Matrix& m, MsignMode mode = MsignMode::exact, int steps = 30);

/// (I - u1 u1^T) M (I - v1 v1^T).
Matrix project_out_top(const Matrix& m, const Vector& u1, const Vector& v1);

double nuclear_norm(const Matrix& m);

/// Leading singular values via Golub-Kahan-Lanczos bidiagonalization with full
/// reorthogonalization.
struct LanczosResult {
  std::vector<double> sigma;  // descending, length k
  bool converged = false;
  double residual = 0.0;  // largest relative Ritz residual among the returned values
  int iterations = 0;
};

LanczosResult top_singular_values(const Matrix& m, int k, double tol = 1e-12, int max_iter = 0);

/// ||M||, accurate to roughly `tol` relative. Exact (up to rounding) once the
/// Krylov space reaches min(rows, cols). min(rows, cols) <= 8 goes through Jacobi.
double spectral_norm(const Matrix& m, double tol = 1e-13);

}  // namespace muonpp::linalg
