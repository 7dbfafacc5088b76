#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcct/common.hpp"

namespace tcct {

// Shape of a batched sequence tensor [batch x length x dim], row-major.
// Weights and other unbatched matrices use batch == 1.
struct Shape {
  long batch = 1;
  long len = 1;
  long dim = 1;

  long numel() const { return batch * len * dim; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Counts multiplications executed by matmul/conv kernels while enabled.
// Per-instance (each model owns one); reads are deterministic for a fixed
// configuration because counted work depends only on shapes.
class MultiplyCounter {
 public:
  void enable(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }
  void add(unsigned long long n);
  unsigned long long value() const { return count_; }
  unsigned long long take() {
    auto v = count_;
    count_ = 0;
    return v;
  }
  void reset() { count_ = 0; }

 private:
  unsigned long long count_ = 0;
  bool enabled_ = false;
};

// A persistent weight. Lives across forward passes; gradients accumulate
// into `grad` when a Graph built from it runs backward.
struct Param {
  std::string name;
  Shape shape;  // batch always 1
  std::vector<Scalar> value;
  std::vector<Scalar> grad;

  Param() = default;
  Param(std::string n, long rows, long cols);
  Param(std::string n, Shape s);
  void zero_grad();
  long size() const { return shape.numel(); }
};

void xavier_init(Param& p, Rng& rng);

// Boolean attention mask, shared across batch: allow[i*cols + j] != 0 iff
// query i may attend to key j.
struct Mask {
  long rows = 0;
  long cols = 0;
  std::vector<std::uint8_t> allow;
  bool allowed(long i, long j) const { return allow[i * cols + j] != 0; }
};
using MaskPtr = std::shared_ptr<const Mask>;

MaskPtr causal_mask(long len);

class Graph;

// Lightweight handle into a Graph node. Valid while the Graph is alive.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Graph* g, int id) : graph_(g), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  int id() const { return id_; }
  Graph* graph() const { return graph_; }
  const Shape& shape() const;
  const std::vector<Scalar>& value() const;
  const std::vector<Scalar>& grad() const;
  Scalar item() const;  // requires numel() == 1

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

// One recorded operation. `inputs` precede `output` in tape order.
struct TapeEntry {
  std::string op;
  std::vector<int> inputs;
  int output = -1;
  std::string scope;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string worst_param;
};

// Define-by-run reverse-mode autodiff tape. One Graph per forward/backward
// pass; weights enter as leaves bound to Params. Not safe for concurrent
// mutation; distinct Graphs are independent.
class Graph {
 public:
  explicit Graph(MultiplyCounter* counter = nullptr) : counter_(counter) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor leaf(Param& p);
  Tensor input(const Shape& s, std::vector<Scalar> data, bool requires_grad = false);
  Tensor constant(const Shape& s, std::vector<Scalar> data);
  Tensor zeros(const Shape& s);

  // --- differentiable kernels -------------------------------------------
  Tensor matmul(Tensor a, Tensor b);               // [..,m,k] x [..,k,n]
  Tensor matmul_nt(Tensor a, Tensor b);            // a x b^T, b is [..,n,k]
  Tensor add(Tensor a, Tensor b);                  // b may broadcast batch/len
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);                  // elementwise, same shape
  Tensor scale(Tensor x, Scalar c);
  Tensor elu(Tensor x);
  Tensor relu(Tensor x);
  Tensor softmax_lastdim(Tensor x, MaskPtr mask = nullptr);
  Tensor softmax_lastdim_per_batch(Tensor x, std::vector<MaskPtr> masks);
  Tensor causal_dilated_conv1d(Tensor x, Tensor w, long dilation,
                               std::optional<Tensor> bias = std::nullopt);
  Tensor causal_maxpool1d(Tensor x);               // kernel 3, stride 2
  Tensor concat_dim(const std::vector<Tensor>& parts);
  std::vector<Tensor> split_dim(Tensor x, const std::vector<long>& sizes);
  Tensor slice_len(Tensor x, long start, long count);
  std::vector<Tensor> split_len(Tensor x, long chunk_len);
  Tensor gather_len(Tensor x, std::vector<long> rows);
  Tensor gather_len_per_batch(Tensor x, const std::vector<std::vector<long>>& rows);
  Tensor scatter_len(Tensor base, std::vector<long> rows, Tensor values);
  Tensor scatter_len_per_batch(Tensor base, const std::vector<std::vector<long>>& rows,
                               Tensor values);
  Tensor mean_len(Tensor x);                       // (B,L,D) -> (B,1,D)
  Tensor cummean_len(Tensor x);                    // y[n] = mean(x[0..n])
  Tensor repeat_len(Tensor x, long times);         // (B,1,D) -> (B,times,D)
  Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, Scalar eps = 1e-5);
  Tensor sum_all(Tensor x);                        // -> (1,1,1)
  Tensor mean_all(Tensor x);
  Tensor mse_against(Tensor pred, const std::vector<Scalar>& target);

  // --- backward ----------------------------------------------------------
  void backward(Tensor loss);

  // --- inspection --------------------------------------------------------
  const std::vector<TapeEntry>& tape() const { return tape_; }
  std::set<int> ancestors(int node_id) const;  // transitive inputs, inclusive
  std::vector<int> leaf_ids() const;
  const Param* bound_param(int node_id) const;
  std::vector<std::string> op_sequence(bool drop_scope_containing = false,
                                       const std::string& needle = "") const;
  bool check_topological_order() const;

  void push_scope(const std::string& name);
  void pop_scope();

  void set_debug_checks(bool on) { debug_checks_ = on; }
  MultiplyCounter* counter() const { return counter_; }

  size_t num_nodes() const { return nodes_.size(); }
  const Shape& shape_of(int id) const { return nodes_[id].shape; }
  const std::vector<Scalar>& value_of(int id) const { return nodes_[id].value; }
  const std::vector<Scalar>& grad_of(int id) const;

  // RAII scope annotation for tape inspection.
  struct Scope {
    Scope(Graph& g, const std::string& name) : g_(g) { g_.push_scope(name); }
    ~Scope() { g_.pop_scope(); }
    Graph& g_;
  };

 private:
  struct Node {
    Shape shape;
    std::vector<Scalar> value;
    std::vector<Scalar> grad;  // allocated on demand during backward
    bool requires_grad = false;
    bool is_leaf = false;
    Param* param = nullptr;
    std::function<void(Graph&, int)> backward_fn;
  };

  int add_node(Node n, const std::string& op, std::vector<int> inputs);
  Node& node(int id) { return nodes_[id]; }
  std::vector<Scalar>& grad_buffer(int id);
  void count(unsigned long long n) {
    if (counter_ && counter_->enabled()) counter_->add(n);
  }
  void check_finite(int id, const std::string& op) const;

  std::vector<Node> nodes_;
  std::vector<TapeEntry> tape_;
  std::vector<std::string> scope_stack_;
  MultiplyCounter* counter_ = nullptr;
  bool debug_checks_ = false;

  friend class Tensor;
};

// Central finite differences against reverse-mode gradients.
//
// `forward` must rebuild the loss from scratch on every call (pure in the
// params), returning the scalar loss value. `grads` are the analytic
// gradients already accumulated in the params by a prior backward().
GradCheckReport finite_diff_check(const std::function<double()>& forward,
                                  std::vector<Param*> params, double eps = 1e-4,
                                  double tolerance = 1e-4,
                                  int max_coords_per_param = -1);

}  // namespace tcct
