#ifndef DAGGNN_DATAGEN_HPP
#define DAGGNN_DATAGEN_HPP

#include <optional>
#include <string>
#include <vector>

#include "daggnn/tensor.hpp"

namespace daggnn {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct GroundTruthDag {
    int m = 0;
    Tensor adjacency;        // (i,j) = weight of edge i -> j
    std::vector<int> order;  // order[k] = node at topological position k
};

enum class DatasetKind { continuous, one_hot_discrete };

struct Dataset {
    std::vector<Tensor> samples;  // each m x d
    DatasetKind kind = DatasetKind::continuous;
    std::optional<GroundTruthDag> truth;

    int n() const { return static_cast<int>(samples.size()); }
    int m() const { return samples.empty() ? 0 : samples.front().rows(); }
    int d() const { return samples.empty() ? 0 : samples.front().cols(); }
};

struct WeightRange {
    double lo = 0.5;
    double hi = 2.0;  // magnitudes drawn from [lo, hi], sign uniform
};

// Erdos-Renyi DAG: random topological order, each order-respecting pair kept
// with probability expected_degree/(m-1), weights uniform on
// [-hi,-lo] U [lo,hi].
GroundTruthDag random_dag(int m, double expected_degree, uint64_t seed,
                          WeightRange weights = {});

// x = A^T x + z solved as (I - A^T) x = z, one standard-normal z per entry.
Dataset sample_linear(const GroundTruthDag& dag, int n, int d, uint64_t seed);

// x_j = sum_i A_ij cos(x_i + 1) + z_j, evaluated in topological order (d=1).
Dataset sample_nonlinear_pre(const GroundTruthDag& dag, int n, uint64_t seed);

// x = 2 sin(A^T(x + 0.5)) + A^T(x + 0.5) + z, topological order (d=1).
Dataset sample_nonlinear_post(const GroundTruthDag& dag, int n, uint64_t seed);

// Columns are u^k * xtilde + v^k + z^k around a shared linear-SEM draw.
Dataset sample_vector_valued(const GroundTruthDag& dag, int n, int d, uint64_t seed);

// Deterministic kernel of the vector-valued sampler, exposed for testing.
Tensor vector_valued_columns(const Tensor& xtilde, const std::vector<double>& u,
                             const std::vector<double>& v, const Tensor& noise);

// First-order ground truth -sin(1) A for the cos generation model.
Tensor nonlinear_pre_effective_truth(const GroundTruthDag& dag);

// Plain-text CSV: header "# m=<m> d=<d> kind=<continuous|discrete>", then one
// sample per line, all d dims of variable 1 first.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// m lines of m comma-separated reals.
void save_adjacency(const Tensor& a, const std::string& path);
Tensor load_adjacency(const std::string& path);

// Shortest round-trippable decimal form, used by every text artifact.
std::string format_double(double v);

}  // namespace daggnn

#endif
