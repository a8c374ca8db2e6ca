#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "demandcast/errors.hpp"

namespace demandcast {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

namespace detail {

inline std::string shape_of(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Scalar>
struct SigmoidOp {
  Scalar operator()(Scalar x) const {
    // Branch on sign so exp() never overflows.
    if (x >= Scalar(0)) {
      return Scalar(1) / (Scalar(1) + std::exp(-x));
    }
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  }
};

template <typename Scalar>
struct TanhOp {
  Scalar operator()(Scalar x) const { return std::tanh(x); }
};

}  // namespace detail

/// W * x + b. Throws DimensionError naming the operand shapes on mismatch.
template <typename DerivedW, typename DerivedX, typename DerivedB>
Vector<typename DerivedW::Scalar> affine(const Eigen::MatrixBase<DerivedW>& W,
                                         const Eigen::MatrixBase<DerivedX>& x,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  if (x.cols() != 1 || b.cols() != 1 || W.cols() != x.rows() || W.rows() != b.rows()) {
    throw DimensionError("affine: W is " + detail::shape_of(W.rows(), W.cols()) + ", x is " +
                         detail::shape_of(x.rows(), x.cols()) + ", b is " +
                         detail::shape_of(b.rows(), b.cols()));
  }
  Vector<typename DerivedW::Scalar> out = b;
  out.noalias() += W * x;
  return out;
}

/// Elementwise logistic function, stable for large |x|.
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return x.derived().unaryExpr(detail::SigmoidOp<typename Derived::Scalar>{});
}

/// Elementwise hyperbolic tangent.
template <typename Derived>
auto tanh_act(const Eigen::MatrixBase<Derived>& x) {
  return x.derived().unaryExpr(detail::TanhOp<typename Derived::Scalar>{});
}

template <typename DerivedA, typename DerivedB>
auto hadamard(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("hadamard: " + detail::shape_of(a.rows(), a.cols()) + " vs " +
                         detail::shape_of(b.rows(), b.cols()));
  }
  return a.derived().cwiseProduct(b.derived());
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().isFinite().all();
}

}  // namespace demandcast
