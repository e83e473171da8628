#ifndef DAGGNN_TENSOR_HPP
#define DAGGNN_TENSOR_HPP

#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace daggnn {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrixError : std::runtime_error {
    SingularMatrixError(const std::string& what, int pivot_index)
        : std::runtime_error(what), pivot(pivot_index) {}
    int pivot;
};

struct TapeError : std::runtime_error {
    explicit TapeError(const std::string& what) : std::runtime_error(what) {}
};

// Dense 2-D matrix of doubles, row-major. Storage is shared between copies,
// so passing tensors around is cheap; treat tensors handed to a Tape as frozen.
class Tensor {
public:
    Tensor() : rows_(0), cols_(0), data_(std::make_shared<std::vector<double>>()) {}
    Tensor(int rows, int cols, double fill = 0.0);
    Tensor(std::initializer_list<std::initializer_list<double>> init);

    static Tensor identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }

    double operator()(int i, int j) const { return (*data_)[static_cast<size_t>(i) * cols_ + j]; }
    double& operator()(int i, int j) { return (*data_)[static_cast<size_t>(i) * cols_ + j]; }

    const std::vector<double>& values() const { return *data_; }
    std::vector<double>& values() { return *data_; }

    // Deep copy with detached storage.
    Tensor clone() const;

    bool all_finite() const;
    double max_abs() const;

    // Tape node id, or -1 when the tensor is not recorded anywhere.
    int node() const { return node_; }

private:
    int rows_, cols_;
    std::shared_ptr<std::vector<double>> data_;
    int node_ = -1;
    friend class Tape;
};

using Rng = std::mt19937_64;

Tensor normal_matrix(int rows, int cols, Rng& rng);

// Untaped helpers used by data generation and by the solve backward pass.
Tensor plain_matmul(const Tensor& a, const Tensor& b);
Tensor plain_transpose(const Tensor& t);

struct LuFactors {
    Tensor lu;              // packed L (unit diagonal) and U
    std::vector<int> perm;  // row permutation applied to the input
    double cond_estimate;   // max|u_ii| / min|u_ii|
};

// LU with partial pivoting. Throws SingularMatrixError (carrying the pivot
// index) when a pivot falls below tol * max_abs.
LuFactors lu_factor(const Tensor& m, double singular_tol = 1e-13);
Tensor lu_solve(const LuFactors& f, const Tensor& b);
// Solves m^T x = g using the factors of m.
Tensor lu_solve_transposed(const LuFactors& f, const Tensor& g);

// Records a forward computation and differentiates it in reverse. Single
// threaded; one backward sweep per tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor parameter(const Tensor& t);
    Tensor constant(const Tensor& t);

    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor solve_left(const Tensor& m, const Tensor& b);

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor square(const Tensor& a);
    Tensor relu(const Tensor& a);
    Tensor exp(const Tensor& a);
    Tensor log(const Tensor& a);
    Tensor negate(const Tensor& a);
    Tensor scale(const Tensor& a, double s);
    Tensor add_scalar(const Tensor& a, double s);
    Tensor clamp_min(const Tensor& a, double lo);
    Tensor huber(const Tensor& a, double delta);

    Tensor row_softmax(const Tensor& a);
    Tensor transpose(const Tensor& a);
    Tensor trace(const Tensor& a);
    Tensor sum(const Tensor& a);
    Tensor matrix_power(const Tensor& a, int k);

    // Layout shuffles for batching: a vertical stack of n blocks of shape
    // block_rows x k becomes block_rows x (n*k) with block b occupying
    // columns [b*k, (b+1)*k), and back.
    Tensor blocks_to_cols(const Tensor& a, int block_rows);
    Tensor cols_to_blocks(const Tensor& a, int block_cols);
    // From each consecutive group of `stride` columns keep [offset, offset+count).
    Tensor select_cols(const Tensor& a, int stride, int offset, int count);

    // Reverse sweep from a scalar loss. Returns gradients of parameter
    // leaves keyed by node id. The tape is consumed afterwards.
    std::unordered_map<int, Tensor> backward(const Tensor& loss);

    // Valid after backward() for parameter leaves; nullptr otherwise.
    const Tensor* gradient(const Tensor& leaf) const;

    int ill_conditioned_warnings() const { return ill_cond_warnings_; }
    void set_condition_warn_threshold(double t) { cond_warn_threshold_ = t; }
    void set_condition_cap(double t) { cond_cap_ = t; }

    size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        bool is_param = false;
        std::function<void(Tape&)> pull;  // accumulates into input grads
    };

    int record(Tensor value, std::function<void(Tape&)> pull, bool is_param = false);
    int ensure(const Tensor& t);  // auto-wraps untaped tensors as constants
    std::vector<double>& grad_buf(int node);
    const Tensor& value_of(int node) const { return nodes_[node].value; }

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    std::unordered_map<int, Tensor> result_;
    bool consumed_ = false;
    int ill_cond_warnings_ = 0;
    double cond_warn_threshold_ = 1e10;
    double cond_cap_ = 1e14;
};

}  // namespace daggnn

#endif
