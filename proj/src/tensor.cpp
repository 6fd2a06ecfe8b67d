#include "dtf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dtf/errors.hpp"

namespace dtf {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) {
    throw DimensionError("matrix " + std::to_string(r) + "x" + std::to_string(c) + " given " +
                         std::to_string(values.size()) + " values");
  }
}

Matrix Matrix::transposed() const {
  Matrix out(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(c, r) = (*this)(r, c);
  return out;
}

// ---------------------------------------------------------------------------
// Tensor

namespace {

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<double> values) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not hold " + std::to_string(values.size()) +
                         " values");
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(values);
  return n;
}

}  // namespace

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_size(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) { return Tensor(new_node(std::move(shape), std::move(values))); }

Tensor Tensor::from(const Matrix& m) { return from({m.rows, m.cols}, m.values); }

Tensor Tensor::scalar(double value) { return from({}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() == 2) return s[1];
  return s.empty() ? 1 : s[0];
}

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }
std::span<const double> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }
bool Tensor::is_leaf() const { return node_->leaf; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), node_->data); }

Tensor Tensor::detach() const { return from(shape(), node_->data); }

// ---------------------------------------------------------------------------
// Tape

namespace {
thread_local GradientTape* g_active_tape = nullptr;
}

GradientTape* GradientTape::active() { return g_active_tape; }

TapeScope::TapeScope(GradientTape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoTapeScope::NoTapeScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoTapeScope::~NoTapeScope() { g_active_tape = previous_; }

void GradientTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined tensor")));
  }
  detail::Node* target = loss.node();
  if (target->leaf) {
    if (target->requires_grad) target->accumulate(0, 1.0);
    return;
  }
  std::size_t end = records_.size();
  while (end > 0 && records_[end - 1].output.get() != target) --end;
  if (end == 0) throw ContractError("backward(): loss was not recorded on this tape");

  for (std::size_t i = 0; i < end; ++i) {
    auto& g = records_[i].output->grad;
    g.assign(records_[i].output->data.size(), 0.0);
  }
  target->grad[0] = 1.0;
  for (std::size_t i = end; i-- > 0;) records_[i].backward();
}

void backward(const Tensor& loss) {
  GradientTape* tape = GradientTape::active();
  if (tape == nullptr) throw ContractError("backward() called with no active tape");
  tape->backward(loss);
}

// ---------------------------------------------------------------------------
// Operations

namespace ops {
namespace {

using NodePtr = std::shared_ptr<detail::Node>;

void require_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

void require_matrix(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Creates the output tensor and, when recording, the tape record whose
// closure is produced by make_backward(output_node).
template <typename MakeBackward>
Tensor emit(const char* op, Shape shape, std::vector<double> values, std::initializer_list<const Tensor*> inputs,
            MakeBackward&& make_backward) {
  require_finite(values, op);
  Tensor out(new_node(std::move(shape), std::move(values)));
  GradientTape* tape = GradientTape::active();
  if (tape == nullptr) return out;
  bool any = false;
  for (const Tensor* in : inputs) any = any || in->requires_grad();
  if (!any) return out;

  NodePtr out_node = out.shared_node();
  out_node->requires_grad = true;
  out_node->leaf = false;
  GradientTape::Record rec;
  for (const Tensor* in : inputs) rec.inputs.push_back(in->shared_node());
  rec.output = out_node;
  rec.backward = make_backward(out_node.get());
  tape->record(std::move(rec));
  return out;
}

bool wants(const NodePtr& n) { return n->requires_grad; }

// Sums in ascending order of magnitude, so the result does not depend on the
// order the terms arrived in.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double x, double y) {
    const double ax = std::abs(x), ay = std::abs(y);
    return ax < ay || (ax == ay && x < y);
  });
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  NodePtr an = a.shared_node(), bn = b.shared_node();
  return emit("matmul", {m, n}, std::move(out), {&a, &b}, [an, bn, m, k, n](detail::Node* o) {
    return [an, bn, o, m, k, n] {
      const double* g = o->grad.data();
      if (wants(an)) {
        // dA = dOut · Bᵀ
        auto& ga = an->grad_buffer();
        const double* pb = bn->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (wants(bn)) {
        // dB = Aᵀ · dOut
        auto& gb = bn->grad_buffer();
        const double* pa = an->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
          }
      }
    };
  });
}

Tensor mix_rows(const Tensor& weights, const Tensor& values) {
  require_matrix(weights, "mix_rows");
  require_matrix(values, "mix_rows");
  const std::size_t m = weights.rows(), k = weights.cols(), n = values.cols();
  if (values.rows() != k) {
    throw DimensionError("mix_rows: inner dimensions differ, " + shape_string(weights.shape()) + " x " +
                         shape_string(values.shape()));
  }
  std::vector<double> out(m * n);
  std::vector<double> terms(k);
  const double* pw = weights.data().data();
  const double* pv = values.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < k; ++p) terms[p] = pw[i * k + p] * pv[p * n + j];
      out[i * n + j] = canonical_sum(terms);
    }
  NodePtr wn = weights.shared_node(), vn = values.shared_node();
  return emit("mix_rows", {m, n}, std::move(out), {&weights, &values}, [wn, vn, m, k, n](detail::Node* o) {
    return [wn, vn, o, m, k, n] {
      const double* g = o->grad.data();
      if (wants(wn)) {
        auto& gw = wn->grad_buffer();
        const double* pv = vn->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pv[p * n + j];
            gw[i * k + p] += acc;
          }
      }
      if (wants(vn)) {
        auto& gv = vn->grad_buffer();
        const double* pw = wn->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double w = pw[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gv[p * n + j] += w * g[i * n + j];
          }
      }
    };
  });
}

namespace {
template <typename Fwd, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  require_same_shape(a, b, op);
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i], y[i]);
  NodePtr an = a.shared_node(), bn = b.shared_node();
  return emit(op, a.shape(), std::move(out), {&a, &b}, [an, bn, da, db](detail::Node* o) {
    return [an, bn, o, da, db] {
      const auto& g = o->grad;
      if (wants(an)) {
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += da(g[i], an->data[i], bn->data[i]);
      }
      if (wants(bn)) {
        auto& gb = bn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += db(g[i], an->data[i], bn->data[i]);
      }
    };
  });
}

template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  NodePtr xn = x.shared_node();
  return emit(op, x.shape(), std::move(out), {&x}, [xn, deriv](detail::Node* o) {
    return [xn, o, deriv] {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o->grad[i] * deriv(xn->data[i], o->data[i]);
    };
  });
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_row_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n || bias.rank() > 2 || (bias.rank() == 2 && bias.rows() != 1)) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  NodePtr xn = x.shared_node(), bn = bias.shared_node();
  return emit("add_row_bias", x.shape(), std::move(out), {&x, &bias}, [xn, bn, m, n](detail::Node* o) {
    return [xn, bn, o, m, n] {
      if (wants(xn)) {
        auto& gx = xn->grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o->grad[i];
      }
      if (wants(bn)) {
        auto& gb = bn->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += o->grad[i * n + j];
      }
    };
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  std::vector<double> terms;
  auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = std::exp(row[j] - mx);
    terms.assign(out.begin() + i * n, out.begin() + (i + 1) * n);
    const double total = canonical_sum(terms);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  NodePtr xn = x.shared_node();
  return emit("softmax_rows", x.shape(), std::move(out), {&x}, [xn, m, n](detail::Node* o) {
    return [xn, o, m, n] {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = o->data.data() + i * n;
        const double* g = o->grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[j] * (g[j] - dot);
      }
    };
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), d = x.cols();
  if (d == 0) throw DimensionError("layer_norm: zero-width rows");
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: gain/bias width does not match " + shape_string(x.shape()));
  }
  auto in = x.data();
  auto g = gain.data(), b = bias.data();
  auto normalized = std::make_shared<std::vector<double>>(m * d);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double s = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = s;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mean) * s;
      (*normalized)[i * d + j] = xh;
      out[i * d + j] = g[j] * xh + b[j];
    }
  }
  NodePtr xn = x.shared_node(), gn = gain.shared_node(), bn = bias.shared_node();
  return emit("layer_norm", x.shape(), std::move(out), {&x, &gain, &bias},
              [xn, gn, bn, normalized, inv_std, m, d](detail::Node* o) {
                return [xn, gn, bn, normalized, inv_std, o, m, d] {
                  const auto& xh = *normalized;
                  const auto& go = o->grad;
                  if (wants(gn)) {
                    auto& gg = gn->grad_buffer();
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < d; ++j) gg[j] += go[i * d + j] * xh[i * d + j];
                  }
                  if (wants(bn)) {
                    auto& gb = bn->grad_buffer();
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
                  }
                  if (wants(xn)) {
                    auto& gx = xn->grad_buffer();
                    const auto& gain_v = gn->data;
                    const double inv_d = 1.0 / static_cast<double>(d);
                    for (std::size_t i = 0; i < m; ++i) {
                      double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                      for (std::size_t j = 0; j < d; ++j) {
                        const double dxh = go[i * d + j] * gain_v[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[i * d + j];
                      }
                      mean_dxh *= inv_d;
                      mean_dxh_xh *= inv_d;
                      for (std::size_t j = 0; j < d; ++j) {
                        const double dxh = go[i * d + j] * gain_v[j];
                        gx[i * d + j] += (*inv_std)[i] * (dxh - mean_dxh - xh[i * d + j] * mean_dxh_xh);
                      }
                    }
                  }
                };
              });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols(), n = na + nb;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * na, na, out.data() + i * n);
    std::copy_n(b.data().data() + i * nb, nb, out.data() + i * n + na);
  }
  NodePtr an = a.shared_node(), bn = b.shared_node();
  return emit("concat_cols", {m, n}, std::move(out), {&a, &b}, [an, bn, m, na, nb, n](detail::Node* o) {
    return [an, bn, o, m, na, nb, n] {
      if (wants(an)) {
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < na; ++j) ga[i * na + j] += o->grad[i * n + j];
      }
      if (wants(bn)) {
        auto& gb = bn->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < nb; ++j) gb[i * nb + j] += o->grad[i * n + na + j];
      }
    };
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  if (begin >= end || end > x.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + shape_string(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(x.data().data() + i * n + begin, w, out.data() + i * w);
  NodePtr xn = x.shared_node();
  return emit("slice_cols", {m, w}, std::move(out), {&x}, [xn, m, n, w, begin](detail::Node* o) {
    return [xn, o, m, n, w, begin] {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) gx[i * n + begin + j] += o->grad[i * w + j];
    };
  });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
  NodePtr xn = x.shared_node();
  return emit("transpose", {n, m}, std::move(out), {&x}, [xn, m, n](detail::Node* o) {
    return [xn, o, m, n] {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += o->grad[j * m + i];
    };
  });
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (m == 0) throw DimensionError("mean_rows: no rows");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.data()[i * n + j];
  for (double& v : out) v /= static_cast<double>(m);
  NodePtr xn = x.shared_node();
  return emit("mean_rows", {1, n}, std::move(out), {&x}, [xn, m, n](detail::Node* o) {
    return [xn, o, m, n] {
      auto& gx = xn->grad_buffer();
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += o->grad[j] * inv;
    };
  });
}

Tensor repeat_rows(const Tensor& x, std::size_t count) {
  require_matrix(x, "repeat_rows");
  if (x.rows() != 1) throw DimensionError("repeat_rows: expected a single row, got " + shape_string(x.shape()));
  const std::size_t n = x.cols();
  std::vector<double> out(count * n);
  for (std::size_t i = 0; i < count; ++i) std::copy_n(x.data().data(), n, out.data() + i * n);
  NodePtr xn = x.shared_node();
  return emit("repeat_rows", {count, n}, std::move(out), {&x}, [xn, count, n](detail::Node* o) {
    return [xn, o, count, n] {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[j] += o->grad[i * n + j];
    };
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  NodePtr xn = x.shared_node();
  return emit("sum", {}, {total}, {&x}, [xn](detail::Node* o) {
    return [xn, o] {
      auto& gx = xn->grad_buffer();
      for (double& g : gx) g += o->grad[0];
    };
  });
}

Tensor mse_reduce(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse_reduce");
  const std::size_t n = a.size();
  if (n == 0) throw DimensionError("mse_reduce: empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = a.data()[i] - b.data()[i];
    total += diff * diff;
  }
  NodePtr an = a.shared_node(), bn = b.shared_node();
  return emit("mse_reduce", {}, {total / static_cast<double>(n)}, {&a, &b}, [an, bn, n](detail::Node* o) {
    return [an, bn, o, n] {
      const double c = 2.0 * o->grad[0] / static_cast<double>(n);
      if (wants(an)) {
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) ga[i] += c * (an->data[i] - bn->data[i]);
      }
      if (wants(bn)) {
        auto& gb = bn->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) gb[i] -= c * (an->data[i] - bn->data[i]);
      }
    };
  });
}

}  // namespace ops
}  // namespace dtf
