#ifndef DAGGNN_METRICS_HPP
#define DAGGNN_METRICS_HPP

#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "daggnn/datagen.hpp"
#include "daggnn/tensor.hpp"

namespace daggnn {

struct EdgeSet {
    int m = 0;
    std::set<std::pair<int, int>> edges;  // (from, to), no self-loops

    bool has(int from, int to) const { return edges.count({from, to}) > 0; }
    void add(int from, int to);
};

struct ThresholdReport {
    EdgeSet edges;
    // edges deleted during cycle repair, smallest |weight| first
    std::vector<std::tuple<int, int, double>> removed;
};

// Keep |A_ij| > tau, then repair residual cycles by deleting the lightest
// edge that lies on some cycle until the graph is acyclic.
ThresholdReport threshold_adjacency(const Tensor& a, double tau = 0.3);

// Edge additions + deletions + reversals; a reversed pair counts once.
int shd(const EdgeSet& predicted, const EdgeSet& truth);

struct FdrResult {
    double value = 0.0;
    bool empty_prediction = false;
};

// (reversed + false positives) / predicted edge count.
FdrResult fdr(const EdgeSet& predicted, const EdgeSet& truth);

// BIC of a discrete one-hot dataset under maximum-likelihood multinomial
// CPTs: log-likelihood minus (log n / 2) * free parameters. Natural log.
double bic_score(const Dataset& dataset, const EdgeSet& graph);

EdgeSet edges_from_adjacency(const Tensor& a, double tol = 0.0);

}  // namespace daggnn

#endif
