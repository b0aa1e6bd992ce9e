#include "kmcoach/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "kmcoach/error.hpp"

namespace kmc::ad {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var Tape::push(Matrix value, std::function<void(Tape&, int)> back) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_of(int id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::parameter(Parameter& p) {
  Parameter* target = &p;
  return push(p.value, [target](Tape& t, int self) {
    if (t.nodes_[self].grad.size()) target->grad += t.nodes_[self].grad;
  });
}

Var Tape::constant(Matrix m) { return push(std::move(m), nullptr); }

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) fail(ErrorKind::kInvalidArgument, "shape_mismatch", "matmul shape mismatch");
  Matrix out = value(a) * value(b);
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad_of(a.id).noalias() += g * t.value(b).transpose();
    t.grad_of(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    fail(ErrorKind::kInvalidArgument, "shape_mismatch", "add shape mismatch");
  Matrix out = value(a) + value(b);
  return push(std::move(out), [a, b](Tape& t, int self) {
    t.grad_of(a.id) += t.grad(self);
    t.grad_of(b.id) += t.grad(self);
  });
}

Var Tape::concat_rows(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.cols() != vb.cols()) fail(ErrorKind::kInvalidArgument, "shape_mismatch", "concat_rows width mismatch");
  Matrix out(va.rows() + vb.rows(), va.cols());
  out.topRows(va.rows()) = va;
  out.bottomRows(vb.rows()) = vb;
  const auto ra = va.rows();
  const auto rb = vb.rows();
  return push(std::move(out), [a, b, ra, rb](Tape& t, int self) {
    t.grad_of(a.id) += t.grad(self).topRows(ra);
    t.grad_of(b.id) += t.grad(self).bottomRows(rb);
  });
}

Var Tape::gather_rows(Var a, std::span<const int> idx) {
  const auto& va = value(a);
  Matrix out(static_cast<Eigen::Index>(idx.size()), va.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = va.row(idx[i]);
  return push(std::move(out), [a, idx](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::scatter_rows(Var a, std::span<const int> idx, int rows) {
  const auto& va = value(a);
  Matrix out = Matrix::Zero(rows, va.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(idx[i]) += va.row(static_cast<Eigen::Index>(i));
  return push(std::move(out), [a, idx](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(static_cast<Eigen::Index>(i)) += g.row(idx[i]);
  });
}

Var Tape::gather_entries(Var a, std::span<const int> rows, int col) {
  const auto& va = value(a);
  Matrix out(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = va(rows[i], col);
  return push(std::move(out), [a, rows, col](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) ga(rows[i], col) += g(static_cast<Eigen::Index>(i), 0);
  });
}

Var Tape::scale_rows(Var a, std::span<const double> w) {
  Matrix out = value(a);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= w[static_cast<std::size_t>(i)];
  return push(std::move(out), [a, w](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    for (Eigen::Index i = 0; i < g.rows(); ++i) ga.row(i) += w[static_cast<std::size_t>(i)] * g.row(i);
  });
}

Var Tape::mul_rows(Var a, Var s) {
  Matrix out = value(a);
  const auto& vs = value(s);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= vs(i, 0);
  return push(std::move(out), [a, s](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    Matrix& gs = t.grad_of(s.id);
    const auto& va = t.value(a);
    const auto& vs = t.value(s);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      ga.row(i) += vs(i, 0) * g.row(i);
      gs(i, 0) += g.row(i).dot(va.row(i));
    }
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  Matrix out = value(a).unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return push(std::move(out), [a, slope](Tape& t, int self) {
    t.grad_of(a.id) += t.grad(self).cwiseProduct(
        t.value(a).unaryExpr([slope](double x) { return x > 0 ? 1.0 : slope; }));
  });
}

Var Tape::silu(Var a) {
  Matrix out = value(a).unaryExpr([](double x) { return x * ad::sigmoid(x); });
  return push(std::move(out), [a](Tape& t, int self) {
    t.grad_of(a.id) += t.grad(self).cwiseProduct(t.value(a).unaryExpr([](double x) {
      const double s = ad::sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }));
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = value(a).unaryExpr([](double x) { return ad::sigmoid(x); });
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& y = t.value(Var{self});
    t.grad_of(a.id) += t.grad(self).cwiseProduct(y.unaryExpr([](double s) { return s * (1.0 - s); }));
  });
}

Var Tape::segment_softmax(Var e, std::span<const int> segment, int num_segments) {
  const auto& ve = value(e);
  const auto n = static_cast<std::size_t>(ve.rows());
  std::vector<double> mx(static_cast<std::size_t>(num_segments), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) mx[segment[i]] = std::max(mx[segment[i]], ve(static_cast<Eigen::Index>(i), 0));
  Matrix out(ve.rows(), 1);
  std::vector<double> denom(static_cast<std::size_t>(num_segments), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::exp(ve(static_cast<Eigen::Index>(i), 0) - mx[segment[i]]);
    out(static_cast<Eigen::Index>(i), 0) = x;
    denom[segment[i]] += x;
  }
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), 0) /= denom[segment[i]];
  return push(std::move(out), [e, segment, num_segments](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(Var{self});
    std::vector<double> dot(static_cast<std::size_t>(num_segments), 0.0);
    for (Eigen::Index i = 0; i < y.rows(); ++i) dot[segment[static_cast<std::size_t>(i)]] += y(i, 0) * g(i, 0);
    Matrix& ge = t.grad_of(e.id);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      ge(i, 0) += y(i, 0) * (g(i, 0) - dot[segment[static_cast<std::size_t>(i)]]);
  });
}

Var Tape::row_dot(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    fail(ErrorKind::kInvalidArgument, "shape_mismatch", "row_dot shape mismatch");
  Matrix out = va.cwiseProduct(vb).rowwise().sum();
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_of(a.id);
    Matrix& gb = t.grad_of(b.id);
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      ga.row(i) += g(i, 0) * vb.row(i);
      gb.row(i) += g(i, 0) * va.row(i);
    }
  });
}

Var Tape::bce(Var p, std::span<const double> labels, double eps) {
  const auto& vp = value(p);
  if (vp.cols() != 1 || static_cast<std::size_t>(vp.rows()) != labels.size() || labels.empty())
    fail(ErrorKind::kInvalidArgument, "shape_mismatch", "bce expects a non-empty column of probabilities per label");
  double total = 0.0;
  for (Eigen::Index i = 0; i < vp.rows(); ++i) {
    const double q = std::clamp(vp(i, 0), eps, 1.0 - eps);
    const double y = labels[static_cast<std::size_t>(i)];
    total -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(vp.rows());
  return push(std::move(out), [p, labels, eps](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    const auto& vp = t.value(p);
    Matrix& gp = t.grad_of(p.id);
    const double n = static_cast<double>(vp.rows());
    for (Eigen::Index i = 0; i < vp.rows(); ++i) {
      const double q = vp(i, 0);
      if (q < eps || q > 1.0 - eps) continue;  // clamped: flat
      const double y = labels[static_cast<std::size_t>(i)];
      gp(i, 0) += g * (-y / q + (1.0 - y) / (1.0 - q)) / n;
    }
  });
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) fail(ErrorKind::kInvalidArgument, "shape_mismatch", "backward expects a scalar loss");
  grad_of(loss.id)(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0 || !n.back) continue;
    n.back(*this, id);
  }
}

}  // namespace kmc::ad
