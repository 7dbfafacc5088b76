#include "tcct/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tcct {

using EMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

namespace {
CMap mat(const std::vector<Scalar>& buf, long b, long rows, long cols) {
  return CMap(buf.data() + b * rows * cols, rows, cols);
}
Map mat(std::vector<Scalar>& buf, long b, long rows, long cols) {
  return Map(buf.data() + b * rows * cols, rows, cols);
}
}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << batch << "," << len << "," << dim << ")";
  return os.str();
}

void MultiplyCounter::add(unsigned long long n) {
  if (!enabled_) return;
  if (count_ > (1ULL << 62) - n) throw NumericError("multiply counter overflow past 2^62");
  count_ += n;
}

Param::Param(std::string n, long rows, long cols)
    : Param(std::move(n), Shape{1, rows, cols}) {}

Param::Param(std::string n, Shape s) : name(std::move(n)), shape(s) {
  value.assign(shape.numel(), Scalar(0));
  grad.assign(shape.numel(), Scalar(0));
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), Scalar(0)); }

void xavier_init(Param& p, Rng& rng) {
  const long fan_in = p.shape.batch * p.shape.len;
  const long fan_out = p.shape.dim;
  const double a = std::sqrt(6.0 / double(fan_in + fan_out));
  for (auto& v : p.value) v = Scalar(rng.uniform(-a, a));
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (k > n) k = n;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(engine_)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MaskPtr causal_mask(long len) {
  auto m = std::make_shared<Mask>();
  m->rows = len;
  m->cols = len;
  m->allow.assign(len * len, 0);
  for (long i = 0; i < len; ++i)
    for (long j = 0; j <= i; ++j) m->allow[i * len + j] = 1;
  return m;
}

// ---------------------------------------------------------------------------
// Tensor handle

const Shape& Tensor::shape() const { return graph_->shape_of(id_); }
const std::vector<Scalar>& Tensor::value() const { return graph_->value_of(id_); }
const std::vector<Scalar>& Tensor::grad() const { return graph_->grad_of(id_); }
Scalar Tensor::item() const {
  TCCT_CHECK_DIM(shape().numel() == 1, "item() on non-scalar tensor ", shape().str());
  return value()[0];
}

// ---------------------------------------------------------------------------
// Graph basics

int Graph::add_node(Node n, const std::string& op, std::vector<int> inputs) {
  const int id = int(nodes_.size());
  nodes_.push_back(std::move(n));
  std::string scope;
  for (const auto& s : scope_stack_) {
    scope += s;
    scope += '.';
  }
  tape_.push_back(TapeEntry{op, std::move(inputs), id, std::move(scope)});
  if (debug_checks_) check_finite(id, op);
  return id;
}

void Graph::check_finite(int id, const std::string& op) const {
  for (Scalar v : nodes_[id].value)
    if (!std::isfinite(double(v)))
      throw NumericError("non-finite value produced by op '" + op + "'");
}

Tensor Graph::leaf(Param& p) {
  Node n;
  n.shape = p.shape;
  n.value = p.value;
  n.requires_grad = true;
  n.is_leaf = true;
  n.param = &p;
  return Tensor(this, add_node(std::move(n), "leaf", {}));
}

Tensor Graph::input(const Shape& s, std::vector<Scalar> data, bool requires_grad) {
  TCCT_CHECK_DIM(long(data.size()) == s.numel(), "input data size ", data.size(),
                 " does not match shape ", s.str());
  Node n;
  n.shape = s;
  n.value = std::move(data);
  n.requires_grad = requires_grad;
  n.is_leaf = true;
  return Tensor(this, add_node(std::move(n), "input", {}));
}

Tensor Graph::constant(const Shape& s, std::vector<Scalar> data) {
  return input(s, std::move(data), false);
}

Tensor Graph::zeros(const Shape& s) {
  return constant(s, std::vector<Scalar>(s.numel(), Scalar(0)));
}

std::vector<Scalar>& Graph::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.shape.numel(), Scalar(0));
  return n.grad;
}

const std::vector<Scalar>& Graph::grad_of(int id) const { return nodes_[id].grad; }

void Graph::push_scope(const std::string& name) { scope_stack_.push_back(name); }
void Graph::pop_scope() { scope_stack_.pop_back(); }

// ---------------------------------------------------------------------------
// matmul family

Tensor Graph::matmul(Tensor a, Tensor b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  TCCT_CHECK_DIM(sa.dim == sb.len, "matmul inner dims disagree: ", sa.str(), " x ", sb.str());
  TCCT_CHECK_DIM(sa.batch == sb.batch || sa.batch == 1 || sb.batch == 1,
                 "matmul batch dims not broadcastable: ", sa.str(), " x ", sb.str());
  const long B = std::max(sa.batch, sb.batch);
  const long m = sa.len, k = sa.dim, n = sb.dim;
  Node out;
  out.shape = {B, m, n};
  out.value.assign(B * m * n, Scalar(0));
  const auto& av = nodes_[a.id()].value;
  const auto& bv = nodes_[b.id()].value;
  for (long i = 0; i < B; ++i) {
    const long ia = sa.batch == 1 ? 0 : i;
    const long ib = sb.batch == 1 ? 0 : i;
    mat(out.value, i, m, n).noalias() = mat(av, ia, m, k) * mat(bv, ib, k, n);
  }
  count((unsigned long long)(B) * m * k * n);
  out.requires_grad = nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad;
  const int aid = a.id(), bid = b.id();
  out.backward_fn = [aid, bid, B, m, k, n](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    const Shape sa2 = g.nodes_[aid].shape, sb2 = g.nodes_[bid].shape;
    if (g.nodes_[aid].requires_grad) {
      auto& ga = g.grad_buffer(aid);
      for (long i = 0; i < B; ++i) {
        const long ia = sa2.batch == 1 ? 0 : i;
        const long ib = sb2.batch == 1 ? 0 : i;
        mat(ga, ia, m, k).noalias() +=
            mat(gy, i, m, n) * mat(g.nodes_[bid].value, ib, k, n).transpose();
      }
    }
    if (g.nodes_[bid].requires_grad) {
      auto& gb = g.grad_buffer(bid);
      for (long i = 0; i < B; ++i) {
        const long ia = sa2.batch == 1 ? 0 : i;
        const long ib = sb2.batch == 1 ? 0 : i;
        mat(gb, ib, k, n).noalias() +=
            mat(g.nodes_[aid].value, ia, m, k).transpose() * mat(gy, i, m, n);
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "matmul", {a.id(), b.id()}));
}

Tensor Graph::matmul_nt(Tensor a, Tensor b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  TCCT_CHECK_DIM(sa.dim == sb.dim, "matmul_nt inner dims disagree: ", sa.str(), " x ", sb.str(), "^T");
  TCCT_CHECK_DIM(sa.batch == sb.batch || sa.batch == 1 || sb.batch == 1,
                 "matmul_nt batch dims not broadcastable");
  const long B = std::max(sa.batch, sb.batch);
  const long m = sa.len, k = sa.dim, n = sb.len;
  Node out;
  out.shape = {B, m, n};
  out.value.assign(B * m * n, Scalar(0));
  const auto& av = nodes_[a.id()].value;
  const auto& bv = nodes_[b.id()].value;
  for (long i = 0; i < B; ++i) {
    const long ia = sa.batch == 1 ? 0 : i;
    const long ib = sb.batch == 1 ? 0 : i;
    mat(out.value, i, m, n).noalias() = mat(av, ia, m, k) * mat(bv, ib, n, k).transpose();
  }
  count((unsigned long long)(B) * m * k * n);
  out.requires_grad = nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad;
  const int aid = a.id(), bid = b.id();
  out.backward_fn = [aid, bid, B, m, k, n](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    const Shape sa2 = g.nodes_[aid].shape, sb2 = g.nodes_[bid].shape;
    for (long i = 0; i < B; ++i) {
      const long ia = sa2.batch == 1 ? 0 : i;
      const long ib = sb2.batch == 1 ? 0 : i;
      if (g.nodes_[aid].requires_grad)
        mat(g.grad_buffer(aid), ia, m, k).noalias() +=
            mat(gy, i, m, n) * mat(g.nodes_[bid].value, ib, n, k);
      if (g.nodes_[bid].requires_grad)
        mat(g.grad_buffer(bid), ib, n, k).noalias() +=
            mat(gy, i, m, n).transpose() * mat(g.nodes_[aid].value, ia, m, k);
    }
  };
  return Tensor(this, add_node(std::move(out), "matmul_nt", {a.id(), b.id()}));
}

// ---------------------------------------------------------------------------
// pointwise and broadcast ops

Tensor Graph::add(Tensor a, Tensor b) {
  const Shape sa = a.shape(), sb = b.shape();
  TCCT_CHECK_DIM(sa.dim == sb.dim && (sb.batch == sa.batch || sb.batch == 1) &&
                     (sb.len == sa.len || sb.len == 1),
                 "add: shape ", sb.str(), " not broadcastable to ", sa.str());
  Node out;
  out.shape = sa;
  out.value = nodes_[a.id()].value;
  const auto& bv = nodes_[b.id()].value;
  for (long i = 0; i < sa.batch; ++i) {
    const long ib = sb.batch == 1 ? 0 : i;
    for (long l = 0; l < sa.len; ++l) {
      const long lb = sb.len == 1 ? 0 : l;
      const Scalar* src = bv.data() + (ib * sb.len + lb) * sb.dim;
      Scalar* dst = out.value.data() + (i * sa.len + l) * sa.dim;
      for (long d = 0; d < sa.dim; ++d) dst[d] += src[d];
    }
  }
  out.requires_grad = nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad;
  const int aid = a.id(), bid = b.id();
  out.backward_fn = [aid, bid, sa, sb](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    if (g.nodes_[aid].requires_grad) {
      auto& ga = g.grad_buffer(aid);
      for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (g.nodes_[bid].requires_grad) {
      auto& gb = g.grad_buffer(bid);
      for (long i = 0; i < sa.batch; ++i) {
        const long ib = sb.batch == 1 ? 0 : i;
        for (long l = 0; l < sa.len; ++l) {
          const long lb = sb.len == 1 ? 0 : l;
          Scalar* dst = gb.data() + (ib * sb.len + lb) * sb.dim;
          const Scalar* src = gy.data() + (i * sa.len + l) * sa.dim;
          for (long d = 0; d < sa.dim; ++d) dst[d] += src[d];
        }
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "add", {a.id(), b.id()}));
}

Tensor Graph::sub(Tensor a, Tensor b) {
  TCCT_CHECK_DIM(a.shape() == b.shape(), "sub: shapes differ: ", a.shape().str(), " vs ",
                 b.shape().str());
  Node out;
  out.shape = a.shape();
  out.value = nodes_[a.id()].value;
  const auto& bv = nodes_[b.id()].value;
  for (size_t i = 0; i < out.value.size(); ++i) out.value[i] -= bv[i];
  out.requires_grad = nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad;
  const int aid = a.id(), bid = b.id();
  out.backward_fn = [aid, bid](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    if (g.nodes_[aid].requires_grad) {
      auto& ga = g.grad_buffer(aid);
      for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (g.nodes_[bid].requires_grad) {
      auto& gb = g.grad_buffer(bid);
      for (size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  };
  return Tensor(this, add_node(std::move(out), "sub", {a.id(), b.id()}));
}

Tensor Graph::mul(Tensor a, Tensor b) {
  TCCT_CHECK_DIM(a.shape() == b.shape(), "mul: shapes differ: ", a.shape().str(), " vs ",
                 b.shape().str());
  Node out;
  out.shape = a.shape();
  out.value = nodes_[a.id()].value;
  const auto& bv = nodes_[b.id()].value;
  for (size_t i = 0; i < out.value.size(); ++i) out.value[i] *= bv[i];
  out.requires_grad = nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad;
  const int aid = a.id(), bid = b.id();
  out.backward_fn = [aid, bid](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    if (g.nodes_[aid].requires_grad) {
      auto& ga = g.grad_buffer(aid);
      const auto& bv2 = g.nodes_[bid].value;
      for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
    }
    if (g.nodes_[bid].requires_grad) {
      auto& gb = g.grad_buffer(bid);
      const auto& av2 = g.nodes_[aid].value;
      for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av2[i];
    }
  };
  return Tensor(this, add_node(std::move(out), "mul", {a.id(), b.id()}));
}

Tensor Graph::scale(Tensor x, Scalar c) {
  Node out;
  out.shape = x.shape();
  out.value = nodes_[x.id()].value;
  for (auto& v : out.value) v *= c;
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, c](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (size_t i = 0; i < gy.size(); ++i) gx[i] += c * gy[i];
  };
  return Tensor(this, add_node(std::move(out), "scale", {x.id()}));
}

Tensor Graph::elu(Tensor x) {
  Node out;
  out.shape = x.shape();
  out.value = nodes_[x.id()].value;
  for (auto& v : out.value) v = v >= Scalar(0) ? v : Scalar(std::expm1(double(v)));
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    const auto& xv = g.nodes_[xid].value;
    const auto& yv = g.nodes_[self].value;
    auto& gx = g.grad_buffer(xid);
    for (size_t i = 0; i < gy.size(); ++i)
      gx[i] += gy[i] * (xv[i] >= Scalar(0) ? Scalar(1) : yv[i] + Scalar(1));
  };
  return Tensor(this, add_node(std::move(out), "elu", {x.id()}));
}

Tensor Graph::relu(Tensor x) {
  Node out;
  out.shape = x.shape();
  out.value = nodes_[x.id()].value;
  for (auto& v : out.value) v = std::max(v, Scalar(0));
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    const auto& xv = g.nodes_[xid].value;
    auto& gx = g.grad_buffer(xid);
    for (size_t i = 0; i < gy.size(); ++i) gx[i] += xv[i] > Scalar(0) ? gy[i] : Scalar(0);
  };
  return Tensor(this, add_node(std::move(out), "relu", {x.id()}));
}

// ---------------------------------------------------------------------------
// softmax

namespace {
// Shared kernel: mask may be null (dense row) and may vary per batch item.
void softmax_forward(const std::vector<Scalar>& xv, std::vector<Scalar>& yv, long B,
                     long L, long D, const std::vector<MaskPtr>& masks) {
  for (long b = 0; b < B; ++b) {
    const Mask* m = masks.empty() ? nullptr
                                  : masks[masks.size() == 1 ? 0 : size_t(b)].get();
    for (long i = 0; i < L; ++i) {
      const Scalar* row = xv.data() + (b * L + i) * D;
      Scalar* out = yv.data() + (b * L + i) * D;
      double mx = -std::numeric_limits<double>::infinity();
      long allowed = 0;
      for (long j = 0; j < D; ++j) {
        if (m && !m->allowed(i, j)) continue;
        ++allowed;
        mx = std::max(mx, double(row[j]));
      }
      if (allowed == 0) {
        // Fully masked row: uniform by convention, gradient treated as zero.
        for (long j = 0; j < D; ++j) out[j] = Scalar(1) / Scalar(D);
        continue;
      }
      double sum = 0;
      for (long j = 0; j < D; ++j) {
        if (m && !m->allowed(i, j)) {
          out[j] = Scalar(0);
          continue;
        }
        const double e = std::exp(double(row[j]) - mx);
        out[j] = Scalar(e);
        sum += e;
      }
      const Scalar inv = Scalar(1.0 / sum);
      for (long j = 0; j < D; ++j) out[j] *= inv;
    }
  }
}
}  // namespace

Tensor Graph::softmax_lastdim(Tensor x, MaskPtr mask) {
  const Shape s = x.shape();
  std::vector<MaskPtr> masks;
  if (mask) {
    TCCT_CHECK_DIM(mask->rows == s.len && mask->cols == s.dim,
                   "softmax mask shape mismatch");
    masks.push_back(std::move(mask));
  }
  Node out;
  out.shape = s;
  out.value.assign(s.numel(), Scalar(0));
  softmax_forward(nodes_[x.id()].value, out.value, s.batch, s.len, s.dim, masks);
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  auto saved_masks = std::make_shared<std::vector<MaskPtr>>(std::move(masks));
  out.backward_fn = [xid, s, saved_masks](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    const auto& yv = g.nodes_[self].value;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b) {
      const Mask* m = saved_masks->empty()
                          ? nullptr
                          : (*saved_masks)[saved_masks->size() == 1 ? 0 : size_t(b)].get();
      for (long i = 0; i < s.len; ++i) {
        const long off = (b * s.len + i) * s.dim;
        if (m) {
          bool any = false;
          for (long j = 0; j < s.dim && !any; ++j) any = m->allowed(i, j);
          if (!any) continue;  // constant output row
        }
        double dot = 0;
        for (long j = 0; j < s.dim; ++j) dot += double(gy[off + j]) * double(yv[off + j]);
        for (long j = 0; j < s.dim; ++j)
          gx[off + j] += yv[off + j] * (gy[off + j] - Scalar(dot));
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "softmax", {x.id()}));
}

Tensor Graph::softmax_lastdim_per_batch(Tensor x, std::vector<MaskPtr> masks) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(long(masks.size()) == s.batch, "need one mask per batch item");
  for (const auto& m : masks)
    TCCT_CHECK_DIM(m && m->rows == s.len && m->cols == s.dim, "softmax mask shape mismatch");
  Node out;
  out.shape = s;
  out.value.assign(s.numel(), Scalar(0));
  softmax_forward(nodes_[x.id()].value, out.value, s.batch, s.len, s.dim, masks);
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  auto saved_masks = std::make_shared<std::vector<MaskPtr>>(std::move(masks));
  out.backward_fn = [xid, s, saved_masks](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    const auto& yv = g.nodes_[self].value;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b) {
      const Mask* m = (*saved_masks)[size_t(b)].get();
      for (long i = 0; i < s.len; ++i) {
        const long off = (b * s.len + i) * s.dim;
        bool any = false;
        for (long j = 0; j < s.dim && !any; ++j) any = m->allowed(i, j);
        if (!any) continue;
        double dot = 0;
        for (long j = 0; j < s.dim; ++j) dot += double(gy[off + j]) * double(yv[off + j]);
        for (long j = 0; j < s.dim; ++j)
          gx[off + j] += yv[off + j] * (gy[off + j] - Scalar(dot));
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "softmax", {x.id()}));
}

// ---------------------------------------------------------------------------
// convolution / pooling

Tensor Graph::causal_dilated_conv1d(Tensor x, Tensor w, long dilation,
                                    std::optional<Tensor> bias) {
  const Shape sx = x.shape();  // (B, L, d)
  const Shape sw = w.shape();  // (k, d, d')
  TCCT_CHECK_CFG(dilation >= 1, "conv dilation must be >= 1, got ", dilation);
  TCCT_CHECK_CFG(sw.batch >= 1, "conv kernel size must be >= 1");
  TCCT_CHECK_DIM(sw.len == sx.dim, "conv weight input dim ", sw.len,
                 " does not match tensor dim ", sx.dim);
  const long B = sx.batch, L = sx.len, d = sx.dim, k = sw.batch, dp = sw.dim;
  Node out;
  out.shape = {B, L, dp};
  out.value.assign(B * L * dp, Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  const auto& wv = nodes_[w.id()].value;
  unsigned long long mults = 0;
  for (long b = 0; b < B; ++b) {
    auto y = mat(out.value, b, L, dp);
    auto xm = mat(xv, b, L, d);
    for (long j = 0; j < k; ++j) {
      const long shift = j * dilation;
      if (shift >= L) break;
      const long rows = L - shift;
      // out[n] += x[n - j*dilation] * W_j, front positions zero-padded.
      y.block(shift, 0, rows, dp).noalias() +=
          xm.block(0, 0, rows, d) * mat(wv, j, d, dp);
      if (b == 0) mults += (unsigned long long)(rows)*d * dp;
    }
  }
  count(mults * (unsigned long long)(B));
  bool rg = nodes_[x.id()].requires_grad || nodes_[w.id()].requires_grad;
  int bias_id = -1;
  if (bias) {
    const Shape sb = bias->shape();
    TCCT_CHECK_DIM(sb.batch == 1 && sb.len == 1 && sb.dim == dp, "conv bias must be (1,1,d')");
    const auto& bvv = nodes_[bias->id()].value;
    for (long b = 0; b < B; ++b)
      mat(out.value, b, L, dp).rowwise() += CMap(bvv.data(), 1, dp).row(0);
    rg = rg || nodes_[bias->id()].requires_grad;
    bias_id = bias->id();
  }
  out.requires_grad = rg;
  const int xid = x.id(), wid = w.id();
  out.backward_fn = [xid, wid, bias_id, B, L, d, k, dp, dilation](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    const auto& xv2 = g.nodes_[xid].value;
    const auto& wv2 = g.nodes_[wid].value;
    const bool need_gx = g.nodes_[xid].requires_grad;
    const bool need_gw = g.nodes_[wid].requires_grad;
    for (long b = 0; b < B; ++b) {
      auto gym = mat(gy, b, L, dp);
      for (long j = 0; j < k; ++j) {
        const long shift = j * dilation;
        if (shift >= L) break;
        const long rows = L - shift;
        if (need_gx)
          mat(g.grad_buffer(xid), b, L, d).block(0, 0, rows, d).noalias() +=
              gym.block(shift, 0, rows, dp) * mat(wv2, j, d, dp).transpose();
        if (need_gw)
          mat(g.grad_buffer(wid), j, d, dp).noalias() +=
              mat(xv2, b, L, d).block(0, 0, rows, d).transpose() *
              gym.block(shift, 0, rows, dp);
      }
    }
    if (bias_id >= 0 && g.nodes_[bias_id].requires_grad) {
      auto& gb = g.grad_buffer(bias_id);
      for (long b = 0; b < B; ++b)
        for (long n = 0; n < L; ++n)
          for (long c = 0; c < dp; ++c) gb[c] += gy[(b * L + n) * dp + c];
    }
  };
  std::vector<int> inputs{x.id(), w.id()};
  if (bias_id >= 0) inputs.push_back(bias_id);
  return Tensor(this, add_node(std::move(out), "conv1d", std::move(inputs)));
}

Tensor Graph::causal_maxpool1d(Tensor x) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(s.len >= 2, "causal_maxpool1d requires length >= 2, got ", s.len);
  const long B = s.batch, L = s.len, D = s.dim, M = L / 2;
  Node out;
  out.shape = {B, M, D};
  out.value.assign(B * M * D, Scalar(0));
  auto argmax = std::make_shared<std::vector<long>>(B * M * D);
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < B; ++b)
    for (long m = 0; m < M; ++m)
      for (long c = 0; c < D; ++c) {
        // Window {2m-1, 2m, 2m+1} clipped at the front; ties keep the
        // lowest index.
        long best = -1;
        Scalar bv = Scalar(0);
        for (long n = std::max<long>(0, 2 * m - 1); n <= 2 * m + 1 && n < L; ++n) {
          const Scalar v = xv[(b * L + n) * D + c];
          if (best < 0 || v > bv) {
            best = n;
            bv = v;
          }
        }
        out.value[(b * M + m) * D + c] = bv;
        (*argmax)[(b * M + m) * D + c] = best;
      }
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, argmax, B, M, D, L](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < B; ++b)
      for (long m = 0; m < M; ++m)
        for (long c = 0; c < D; ++c) {
          const long n = (*argmax)[(b * M + m) * D + c];
          gx[(b * L + n) * D + c] += gy[(b * M + m) * D + c];
        }
  };
  return Tensor(this, add_node(std::move(out), "maxpool", {x.id()}));
}

// ---------------------------------------------------------------------------
// reshaping along dim / len

Tensor Graph::concat_dim(const std::vector<Tensor>& parts) {
  TCCT_CHECK_DIM(!parts.empty(), "concat_dim of zero parts");
  const Shape s0 = parts[0].shape();
  long total = 0;
  for (const auto& p : parts) {
    TCCT_CHECK_DIM(p.shape().batch == s0.batch && p.shape().len == s0.len,
                   "concat_dim: batch/length mismatch: ", p.shape().str(), " vs ", s0.str());
    total += p.shape().dim;
  }
  Node out;
  out.shape = {s0.batch, s0.len, total};
  out.value.assign(out.shape.numel(), Scalar(0));
  std::vector<int> ids;
  std::vector<long> dims;
  bool rg = false;
  for (const auto& p : parts) {
    ids.push_back(p.id());
    dims.push_back(p.shape().dim);
    rg = rg || nodes_[p.id()].requires_grad;
  }
  for (long b = 0; b < s0.batch; ++b)
    for (long l = 0; l < s0.len; ++l) {
      long off = 0;
      for (size_t pi = 0; pi < ids.size(); ++pi) {
        const auto& pv = nodes_[ids[pi]].value;
        std::copy_n(pv.data() + (b * s0.len + l) * dims[pi], dims[pi],
                    out.value.data() + (b * s0.len + l) * total + off);
        off += dims[pi];
      }
    }
  out.requires_grad = rg;
  const long B = s0.batch, L = s0.len;
  out.backward_fn = [ids, dims, B, L, total](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    long off = 0;
    for (size_t pi = 0; pi < ids.size(); ++pi) {
      if (g.nodes_[ids[pi]].requires_grad) {
        auto& gp = g.grad_buffer(ids[pi]);
        for (long b = 0; b < B; ++b)
          for (long l = 0; l < L; ++l)
            for (long d = 0; d < dims[pi]; ++d)
              gp[(b * L + l) * dims[pi] + d] += gy[(b * L + l) * total + off + d];
      }
      off += dims[pi];
    }
  };
  return Tensor(this, add_node(std::move(out), "concat_dim", std::move(ids)));
}

std::vector<Tensor> Graph::split_dim(Tensor x, const std::vector<long>& sizes) {
  const Shape s = x.shape();
  long total = 0;
  for (long v : sizes) total += v;
  TCCT_CHECK_DIM(total == s.dim, "split_dim sizes sum to ", total, " but dim is ", s.dim);
  std::vector<Tensor> outs;
  long off = 0;
  for (long sz : sizes) {
    Node out;
    out.shape = {s.batch, s.len, sz};
    out.value.assign(out.shape.numel(), Scalar(0));
    const auto& xv = nodes_[x.id()].value;
    for (long b = 0; b < s.batch; ++b)
      for (long l = 0; l < s.len; ++l)
        std::copy_n(xv.data() + (b * s.len + l) * s.dim + off, sz,
                    out.value.data() + (b * s.len + l) * sz);
    out.requires_grad = nodes_[x.id()].requires_grad;
    const int xid = x.id();
    const long o = off, B = s.batch, L = s.len, D = s.dim;
    out.backward_fn = [xid, o, sz, B, L, D](Graph& g, int self) {
      if (!g.nodes_[xid].requires_grad) return;
      const auto& gy = g.nodes_[self].grad;
      auto& gx = g.grad_buffer(xid);
      for (long b = 0; b < B; ++b)
        for (long l = 0; l < L; ++l)
          for (long d = 0; d < sz; ++d)
            gx[(b * L + l) * D + o + d] += gy[(b * L + l) * sz + d];
    };
    outs.emplace_back(this, add_node(std::move(out), "split_dim", {x.id()}));
    off += sz;
  }
  return outs;
}

Tensor Graph::slice_len(Tensor x, long start, long count2) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(start >= 0 && count2 >= 1 && start + count2 <= s.len,
                 "slice_len [", start, ",", start + count2, ") out of range for len ", s.len);
  Node out;
  out.shape = {s.batch, count2, s.dim};
  out.value.assign(out.shape.numel(), Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < s.batch; ++b)
    std::copy_n(xv.data() + (b * s.len + start) * s.dim, count2 * s.dim,
                out.value.data() + b * count2 * s.dim);
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, s, start, count2](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b)
      for (long i = 0; i < count2 * s.dim; ++i)
        gx[(b * s.len + start) * s.dim + i] += gy[b * count2 * s.dim + i];
  };
  return Tensor(this, add_node(std::move(out), "slice_len", {x.id()}));
}

std::vector<Tensor> Graph::split_len(Tensor x, long chunk_len) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(chunk_len >= 1 && s.len % chunk_len == 0, "split_len: ", chunk_len,
                 " does not divide length ", s.len);
  std::vector<Tensor> outs;
  for (long start = 0; start < s.len; start += chunk_len)
    outs.push_back(slice_len(x, start, chunk_len));
  return outs;
}

Tensor Graph::gather_len(Tensor x, std::vector<long> rows) {
  std::vector<std::vector<long>> per(1, std::move(rows));
  return gather_len_per_batch(x, per);
}

Tensor Graph::gather_len_per_batch(Tensor x, const std::vector<std::vector<long>>& rows) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(long(rows.size()) == s.batch || rows.size() == 1,
                 "gather_len: need row list per batch item");
  const long U = long(rows[0].size());
  for (const auto& r : rows) {
    TCCT_CHECK_DIM(long(r.size()) == U, "gather_len: ragged row lists");
    for (long v : r) TCCT_CHECK_DIM(v >= 0 && v < s.len, "gather_len: row out of range");
  }
  Node out;
  out.shape = {s.batch, U, s.dim};
  out.value.assign(out.shape.numel(), Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < s.batch; ++b) {
    const auto& r = rows[rows.size() == 1 ? 0 : size_t(b)];
    for (long i = 0; i < U; ++i)
      std::copy_n(xv.data() + (b * s.len + r[i]) * s.dim, s.dim,
                  out.value.data() + (b * U + i) * s.dim);
  }
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  auto saved = std::make_shared<std::vector<std::vector<long>>>(rows);
  out.backward_fn = [xid, s, U, saved](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b) {
      const auto& r = (*saved)[saved->size() == 1 ? 0 : size_t(b)];
      for (long i = 0; i < U; ++i)
        for (long d = 0; d < s.dim; ++d)
          gx[(b * s.len + r[i]) * s.dim + d] += gy[(b * U + i) * s.dim + d];
    }
  };
  return Tensor(this, add_node(std::move(out), "gather_len", {x.id()}));
}

Tensor Graph::scatter_len(Tensor base, std::vector<long> rows, Tensor values) {
  std::vector<std::vector<long>> per(1, std::move(rows));
  return scatter_len_per_batch(base, per, values);
}

Tensor Graph::scatter_len_per_batch(Tensor base,
                                    const std::vector<std::vector<long>>& rows,
                                    Tensor values) {
  const Shape s = base.shape();
  const Shape sv = values.shape();
  TCCT_CHECK_DIM(sv.batch == s.batch && sv.dim == s.dim, "scatter_len: value shape mismatch");
  TCCT_CHECK_DIM(long(rows.size()) == s.batch || rows.size() == 1,
                 "scatter_len: need row list per batch item");
  for (const auto& r : rows) {
    TCCT_CHECK_DIM(long(r.size()) == sv.len, "scatter_len: row count mismatch");
    for (long v : r) TCCT_CHECK_DIM(v >= 0 && v < s.len, "scatter_len: row out of range");
  }
  Node out;
  out.shape = s;
  out.value = nodes_[base.id()].value;
  const auto& vv = nodes_[values.id()].value;
  for (long b = 0; b < s.batch; ++b) {
    const auto& r = rows[rows.size() == 1 ? 0 : size_t(b)];
    for (long i = 0; i < sv.len; ++i)
      std::copy_n(vv.data() + (b * sv.len + i) * s.dim, s.dim,
                  out.value.data() + (b * s.len + r[i]) * s.dim);
  }
  out.requires_grad =
      nodes_[base.id()].requires_grad || nodes_[values.id()].requires_grad;
  const int bid = base.id(), vid = values.id();
  auto saved = std::make_shared<std::vector<std::vector<long>>>(rows);
  out.backward_fn = [bid, vid, s, sv, saved](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    if (g.nodes_[bid].requires_grad) {
      auto& gb = g.grad_buffer(bid);
      std::vector<std::uint8_t> replaced(s.batch * s.len, 0);
      for (long b = 0; b < s.batch; ++b) {
        const auto& r = (*saved)[saved->size() == 1 ? 0 : size_t(b)];
        for (long v : r) replaced[b * s.len + v] = 1;
      }
      for (long b = 0; b < s.batch; ++b)
        for (long l = 0; l < s.len; ++l)
          if (!replaced[b * s.len + l])
            for (long d = 0; d < s.dim; ++d)
              gb[(b * s.len + l) * s.dim + d] += gy[(b * s.len + l) * s.dim + d];
    }
    if (g.nodes_[vid].requires_grad) {
      auto& gv = g.grad_buffer(vid);
      for (long b = 0; b < s.batch; ++b) {
        const auto& r = (*saved)[saved->size() == 1 ? 0 : size_t(b)];
        for (long i = 0; i < sv.len; ++i)
          for (long d = 0; d < s.dim; ++d)
            gv[(b * sv.len + i) * s.dim + d] += gy[(b * s.len + r[i]) * s.dim + d];
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "scatter_len", {base.id(), values.id()}));
}

Tensor Graph::mean_len(Tensor x) {
  const Shape s = x.shape();
  Node out;
  out.shape = {s.batch, 1, s.dim};
  out.value.assign(s.batch * s.dim, Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < s.batch; ++b)
    for (long l = 0; l < s.len; ++l)
      for (long d = 0; d < s.dim; ++d) out.value[b * s.dim + d] += xv[(b * s.len + l) * s.dim + d];
  for (auto& v : out.value) v /= Scalar(s.len);
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, s](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    const Scalar inv = Scalar(1) / Scalar(s.len);
    for (long b = 0; b < s.batch; ++b)
      for (long l = 0; l < s.len; ++l)
        for (long d = 0; d < s.dim; ++d)
          gx[(b * s.len + l) * s.dim + d] += gy[b * s.dim + d] * inv;
  };
  return Tensor(this, add_node(std::move(out), "mean_len", {x.id()}));
}

Tensor Graph::cummean_len(Tensor x) {
  const Shape s = x.shape();
  Node out;
  out.shape = s;
  out.value.assign(s.numel(), Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < s.batch; ++b) {
    std::vector<double> acc(s.dim, 0.0);
    for (long l = 0; l < s.len; ++l) {
      for (long d = 0; d < s.dim; ++d) {
        acc[d] += double(xv[(b * s.len + l) * s.dim + d]);
        out.value[(b * s.len + l) * s.dim + d] = Scalar(acc[d] / double(l + 1));
      }
    }
  }
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, s](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b) {
      std::vector<double> suffix(s.dim, 0.0);
      for (long l = s.len - 1; l >= 0; --l) {
        for (long d = 0; d < s.dim; ++d) {
          suffix[d] += double(gy[(b * s.len + l) * s.dim + d]) / double(l + 1);
          gx[(b * s.len + l) * s.dim + d] += Scalar(suffix[d]);
        }
      }
    }
  };
  return Tensor(this, add_node(std::move(out), "cummean_len", {x.id()}));
}

Tensor Graph::repeat_len(Tensor x, long times) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(s.len == 1, "repeat_len expects length-1 input, got ", s.str());
  Node out;
  out.shape = {s.batch, times, s.dim};
  out.value.assign(out.shape.numel(), Scalar(0));
  const auto& xv = nodes_[x.id()].value;
  for (long b = 0; b < s.batch; ++b)
    for (long l = 0; l < times; ++l)
      std::copy_n(xv.data() + b * s.dim, s.dim, out.value.data() + (b * times + l) * s.dim);
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, s, times](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const auto& gy = g.nodes_[self].grad;
    auto& gx = g.grad_buffer(xid);
    for (long b = 0; b < s.batch; ++b)
      for (long l = 0; l < times; ++l)
        for (long d = 0; d < s.dim; ++d) gx[b * s.dim + d] += gy[(b * times + l) * s.dim + d];
  };
  return Tensor(this, add_node(std::move(out), "repeat_len", {x.id()}));
}

Tensor Graph::layer_norm(Tensor x, Tensor gamma, Tensor beta, Scalar eps) {
  const Shape s = x.shape();
  TCCT_CHECK_DIM(gamma.shape().dim == s.dim && beta.shape().dim == s.dim,
                 "layer_norm gamma/beta dim mismatch");
  Node out;
  out.shape = s;
  out.value.assign(s.numel(), Scalar(0));
  auto xhat = std::make_shared<std::vector<Scalar>>(s.numel());
  auto inv_std = std::make_shared<std::vector<Scalar>>(s.batch * s.len);
  const auto& xv = nodes_[x.id()].value;
  const auto& gv = nodes_[gamma.id()].value;
  const auto& bv = nodes_[beta.id()].value;
  for (long b = 0; b < s.batch; ++b)
    for (long l = 0; l < s.len; ++l) {
      const long off = (b * s.len + l) * s.dim;
      double mu = 0;
      for (long d = 0; d < s.dim; ++d) mu += double(xv[off + d]);
      mu /= double(s.dim);
      double var = 0;
      for (long d = 0; d < s.dim; ++d) {
        const double c = double(xv[off + d]) - mu;
        var += c * c;
      }
      var /= double(s.dim);
      const double istd = 1.0 / std::sqrt(var + double(eps));
      (*inv_std)[b * s.len + l] = Scalar(istd);
      for (long d = 0; d < s.dim; ++d) {
        const Scalar xh = Scalar((double(xv[off + d]) - mu) * istd);
        (*xhat)[off + d] = xh;
        out.value[off + d] = xh * gv[d] + bv[d];
      }
    }
  out.requires_grad = nodes_[x.id()].requires_grad || nodes_[gamma.id()].requires_grad ||
                      nodes_[beta.id()].requires_grad;
  const int xid = x.id(), gid = gamma.id(), bid = beta.id();
  out.backward_fn = [xid, gid, bid, s, xhat, inv_std](Graph& g, int self) {
    const auto& gy = g.nodes_[self].grad;
    const auto& gv2 = g.nodes_[gid].value;
    const bool need_gx = g.nodes_[xid].requires_grad;
    const bool need_gg = g.nodes_[gid].requires_grad;
    const bool need_gb = g.nodes_[bid].requires_grad;
    for (long b = 0; b < s.batch; ++b)
      for (long l = 0; l < s.len; ++l) {
        const long off = (b * s.len + l) * s.dim;
        if (need_gg || need_gb) {
          for (long d = 0; d < s.dim; ++d) {
            if (need_gg) g.grad_buffer(gid)[d] += gy[off + d] * (*xhat)[off + d];
            if (need_gb) g.grad_buffer(bid)[d] += gy[off + d];
          }
        }
        if (need_gx) {
          double m1 = 0, m2 = 0;
          for (long d = 0; d < s.dim; ++d) {
            const double gh = double(gy[off + d]) * double(gv2[d]);
            m1 += gh;
            m2 += gh * double((*xhat)[off + d]);
          }
          m1 /= double(s.dim);
          m2 /= double(s.dim);
          auto& gx = g.grad_buffer(xid);
          const double istd = double((*inv_std)[b * s.len + l]);
          for (long d = 0; d < s.dim; ++d) {
            const double gh = double(gy[off + d]) * double(gv2[d]);
            gx[off + d] += Scalar(istd * (gh - m1 - double((*xhat)[off + d]) * m2));
          }
        }
      }
  };
  return Tensor(this, add_node(std::move(out), "layer_norm", {x.id(), gamma.id(), beta.id()}));
}

Tensor Graph::sum_all(Tensor x) {
  Node out;
  out.shape = {1, 1, 1};
  double acc = 0;
  for (Scalar v : nodes_[x.id()].value) acc += double(v);
  out.value.assign(1, Scalar(acc));
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const Scalar gy = g.nodes_[self].grad[0];
    auto& gx = g.grad_buffer(xid);
    for (auto& v : gx) v += gy;
  };
  return Tensor(this, add_node(std::move(out), "sum_all", {x.id()}));
}

Tensor Graph::mean_all(Tensor x) {
  const long n = x.shape().numel();
  Node out;
  out.shape = {1, 1, 1};
  double acc = 0;
  for (Scalar v : nodes_[x.id()].value) acc += double(v);
  out.value.assign(1, Scalar(acc / double(n)));
  out.requires_grad = nodes_[x.id()].requires_grad;
  const int xid = x.id();
  out.backward_fn = [xid, n](Graph& g, int self) {
    if (!g.nodes_[xid].requires_grad) return;
    const Scalar gy = g.nodes_[self].grad[0] / Scalar(n);
    auto& gx = g.grad_buffer(xid);
    for (auto& v : gx) v += gy;
  };
  return Tensor(this, add_node(std::move(out), "mean_all", {x.id()}));
}

Tensor Graph::mse_against(Tensor pred, const std::vector<Scalar>& target) {
  const long n = pred.shape().numel();
  TCCT_CHECK_DIM(long(target.size()) == n, "mse_against: target size mismatch");
  Node out;
  out.shape = {1, 1, 1};
  const auto& pv = nodes_[pred.id()].value;
  double acc = 0;
  for (long i = 0; i < n; ++i) {
    const double e = double(pv[i]) - double(target[i]);
    acc += e * e;
  }
  out.value.assign(1, Scalar(acc / double(n)));
  out.requires_grad = nodes_[pred.id()].requires_grad;
  const int pid = pred.id();
  auto saved = std::make_shared<std::vector<Scalar>>(target);
  out.backward_fn = [pid, n, saved](Graph& g, int self) {
    if (!g.nodes_[pid].requires_grad) return;
    const Scalar gy = g.nodes_[self].grad[0];
    const auto& pv2 = g.nodes_[pid].value;
    auto& gp = g.grad_buffer(pid);
    const Scalar c = gy * Scalar(2) / Scalar(n);
    for (long i = 0; i < n; ++i) gp[i] += c * (pv2[i] - (*saved)[i]);
  };
  return Tensor(this, add_node(std::move(out), "mse", {pred.id()}));
}

// ---------------------------------------------------------------------------
// backward driver

void Graph::backward(Tensor loss) {
  TCCT_CHECK_DIM(loss.graph() == this, "backward: tensor from another graph");
  TCCT_CHECK_DIM(loss.shape().numel() == 1, "backward: loss must be scalar, got ",
                 loss.shape().str());
  if (!nodes_[loss.id()].requires_grad)
    throw NumericError("backward: loss is detached from every differentiable leaf");
  grad_buffer(loss.id())[0] = Scalar(1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward_fn) n.backward_fn(*this, id);
  }
  for (auto& n : nodes_)
    if (n.is_leaf && n.param && !n.grad.empty())
      for (long i = 0; i < n.shape.numel(); ++i) n.param->grad[i] += n.grad[i];
}

// ---------------------------------------------------------------------------
// inspection

std::set<int> Graph::ancestors(int node_id) const {
  std::set<int> seen;
  std::vector<int> stack{node_id};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    for (int in : tape_[id].inputs) stack.push_back(in);
  }
  return seen;
}

std::vector<int> Graph::leaf_ids() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf) out.push_back(int(i));
  return out;
}

const Param* Graph::bound_param(int node_id) const { return nodes_[node_id].param; }

std::vector<std::string> Graph::op_sequence(bool drop_scope_containing,
                                            const std::string& needle) const {
  std::vector<std::string> out;
  for (const auto& e : tape_) {
    if (drop_scope_containing && e.scope.find(needle) != std::string::npos) continue;
    out.push_back(e.op);
  }
  return out;
}

bool Graph::check_topological_order() const {
  for (const auto& e : tape_)
    for (int in : e.inputs)
      if (in >= e.output) return false;
  return true;
}

// ---------------------------------------------------------------------------
// finite differences

GradCheckReport finite_diff_check(const std::function<double()>& forward,
                                  std::vector<Param*> params, double eps,
                                  double tolerance, int max_coords_per_param) {
  GradCheckReport rep;
  rep.tolerance = tolerance;
  for (Param* p : params) {
    const long n = p->size();
    std::vector<long> coords;
    if (max_coords_per_param <= 0 || n <= max_coords_per_param) {
      coords.resize(n);
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      for (int i = 0; i < max_coords_per_param; ++i)
        coords.push_back(long(i) * n / max_coords_per_param);
    }
    for (long c : coords) {
      const Scalar orig = p->value[c];
      p->value[c] = orig + Scalar(eps);
      const double fp = forward();
      p->value[c] = orig - Scalar(eps);
      const double fm = forward();
      p->value[c] = orig;
      const double fd = (fp - fm) / (2 * eps);
      const double an = double(p->grad[c]);
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-2});
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_param = p->name + "[" + std::to_string(c) + "]";
      }
    }
  }
  rep.pass = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace tcct
