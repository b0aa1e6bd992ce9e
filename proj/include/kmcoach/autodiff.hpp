#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kmc::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable tensor with a gradient buffer of identical shape.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct Var {
  int id = -1;
};

/// Reverse-mode tape over row-major matrices. Index spans passed to the
/// structural ops must outlive the tape.
class Tape {
 public:
  Var parameter(Parameter& p);
  Var constant(Matrix m);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var concat_rows(Var a, Var b);
  /// out[i] = a[idx[i]]
  Var gather_rows(Var a, std::span<const int> idx);
  /// out[idx[i]] += a[i], out has `rows` rows.
  Var scatter_rows(Var a, std::span<const int> idx, int rows);
  /// out[i] = a[rows[i], col], a column vector.
  Var gather_entries(Var a, std::span<const int> rows, int col);
  /// out[i] = w[i] * a[i] with constant weights.
  Var scale_rows(Var a, std::span<const double> w);
  /// out[i] = s[i] * a[i] where s is a column vector variable.
  Var mul_rows(Var a, Var s);
  Var leaky_relu(Var a, double slope);
  /// x * sigmoid(x)
  Var silu(Var a);
  Var sigmoid(Var a);
  /// Softmax of a column vector within groups sharing the same segment id.
  Var segment_softmax(Var e, std::span<const int> segment, int num_segments);
  /// out[i] = <a[i], b[i]>
  Var row_dot(Var a, Var b);
  /// Mean binary cross-entropy of probabilities p against labels; p is clamped to [eps, 1 - eps].
  Var bce(Var p, std::span<const double> labels, double eps);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and accumulates into parameter grads.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> back;
  };

  Var push(Matrix value, std::function<void(Tape&, int)> back);
  Matrix& grad_of(int id);
  const Matrix& grad(int id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

double sigmoid(double x);

}  // namespace kmc::ad
