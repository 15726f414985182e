#include "gsc/sparse_cholesky.hpp"

#include <cholmod.h>

#include <cstring>
#include <string>

#include "gsc/error.hpp"

namespace gsc {

struct SparseCholesky::Impl {
  cholmod_common common{};
  cholmod_factor* factor = nullptr;
  Eigen::Index n = 0;

  Impl() {
    cholmod_start(&common);
    common.print = 0;
    common.supernodal = CHOLMOD_AUTO;
  }
  ~Impl() {
    if (factor) cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }

  Eigen::MatrixXd run(int system, const Eigen::MatrixXd& rhs) {
    cholmod_dense* b = cholmod_allocate_dense(rhs.rows(), rhs.cols(), rhs.rows(), CHOLMOD_REAL, &common);
    std::memcpy(b->x, rhs.data(), sizeof(double) * static_cast<std::size_t>(rhs.size()));
    cholmod_dense* x = cholmod_solve(system, factor, b, &common);
    cholmod_free_dense(&b, &common);
    if (!x) throw NumericError("CHOLMOD solve failed");
    Eigen::MatrixXd out(rhs.rows(), rhs.cols());
    std::memcpy(out.data(), x->x, sizeof(double) * static_cast<std::size_t>(out.size()));
    cholmod_free_dense(&x, &common);
    return out;
  }
};

SparseCholesky::SparseCholesky(const SparseMatrix& matrix) : impl_(std::make_unique<Impl>()) {
  if (matrix.rows() != matrix.cols()) throw InputError("matrix must be square");
  auto& c = impl_->common;
  impl_->n = matrix.rows();
  // Lower triangle in compressed column form.
  SparseMatrix lower = matrix.triangularView<Eigen::Lower>();
  lower.makeCompressed();
  cholmod_sparse* a = cholmod_allocate_sparse(lower.rows(), lower.cols(), lower.nonZeros(), 1, 1, -1,
                                              CHOLMOD_REAL, &c);
  std::memcpy(a->p, lower.outerIndexPtr(), sizeof(int) * static_cast<std::size_t>(lower.cols() + 1));
  std::memcpy(a->i, lower.innerIndexPtr(), sizeof(int) * static_cast<std::size_t>(lower.nonZeros()));
  std::memcpy(a->x, lower.valuePtr(), sizeof(double) * static_cast<std::size_t>(lower.nonZeros()));
  impl_->factor = cholmod_analyze(a, &c);
  if (!impl_->factor) {
    cholmod_free_sparse(&a, &c);
    throw NumericError("CHOLMOD analysis failed");
  }
  cholmod_factorize(a, impl_->factor, &c);
  cholmod_free_sparse(&a, &c);
  if (c.status == CHOLMOD_NOT_POSDEF || impl_->factor->minor < impl_->factor->n)
    throw NumericError("matrix is not positive definite (pivot " + std::to_string(impl_->factor->minor) + ")");
  if (c.status < CHOLMOD_OK) throw NumericError("CHOLMOD factorization failed");
}

SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

Eigen::Index SparseCholesky::size() const { return impl_->n; }

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != impl_->n) throw InputError("rhs size mismatch");
  return impl_->run(CHOLMOD_A, rhs);
}

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != impl_->n) throw InputError("rhs size mismatch");
  return impl_->run(CHOLMOD_A, rhs);
}

Eigen::VectorXd SparseCholesky::correlate(const Eigen::VectorXd& z) const {
  return correlate(Eigen::MatrixXd(z)).col(0);
}

Eigen::MatrixXd SparseCholesky::correlate(const Eigen::MatrixXd& z) const {
  if (z.rows() != impl_->n) throw InputError("rhs size mismatch");
  // Supernodal factors are LL^T; simplicial ones are converted on request.
  if (!impl_->factor->is_ll) {
    cholmod_change_factor(CHOLMOD_REAL, 1, impl_->factor->is_super, 1, 1, impl_->factor, &impl_->common);
  }
  Eigen::MatrixXd y = impl_->run(CHOLMOD_Lt, z);
  return impl_->run(CHOLMOD_Pt, y);
}

double SparseCholesky::factor_nonzeros() const {
  const auto* f = impl_->factor;
  if (f->is_super) return static_cast<double>(f->xsize);
  return static_cast<double>(f->nzmax);
}

}  // namespace gsc
