#include "daggnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "daggnn/acyclicity.hpp"

namespace daggnn {

void EdgeSet::add(int from, int to) {
    if (from < 0 || from >= m || to < 0 || to >= m)
        throw DomainError("edge endpoint out of range");
    if (from == to) throw DomainError("self-loops are not representable");
    edges.insert({from, to});
}

namespace {

std::vector<std::vector<bool>> pattern_of(const EdgeSet& es) {
    std::vector<std::vector<bool>> p(es.m, std::vector<bool>(es.m, false));
    for (auto [i, j] : es.edges) p[i][j] = true;
    return p;
}

bool reaches(const std::vector<std::vector<bool>>& adj, int from, int to) {
    const int m = static_cast<int>(adj.size());
    std::vector<bool> seen(m, false);
    std::vector<int> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        if (cur == to) return true;
        for (int next = 0; next < m; ++next)
            if (adj[cur][next] && !seen[next]) {
                seen[next] = true;
                stack.push_back(next);
            }
    }
    return false;
}

}  // namespace

EdgeSet edges_from_adjacency(const Tensor& a, double tol) {
    if (a.rows() != a.cols()) throw ShapeError("adjacency matrix must be square");
    EdgeSet es;
    es.m = a.rows();
    for (int i = 0; i < es.m; ++i)
        for (int j = 0; j < es.m; ++j)
            if (i != j && std::fabs(a(i, j)) > tol) es.add(i, j);
    return es;
}

ThresholdReport threshold_adjacency(const Tensor& a, double tau) {
    if (tau < 0.0) throw DomainError("threshold must be nonnegative");
    ThresholdReport report;
    report.edges = edges_from_adjacency(a, tau);
    auto pattern = pattern_of(report.edges);
    while (!is_acyclic_oracle(pattern)) {
        // lightest edge lying on some cycle: (i,j) with a path j -> i
        double best_w = 0.0;
        std::pair<int, int> best{-1, -1};
        for (auto [i, j] : report.edges.edges) {
            pattern[i][j] = false;
            const bool on_cycle = reaches(pattern, j, i);
            pattern[i][j] = true;
            if (!on_cycle) continue;
            const double w = std::fabs(a(i, j));
            if (best.first < 0 || w < best_w) {
                best_w = w;
                best = {i, j};
            }
        }
        report.edges.edges.erase(best);
        pattern[best.first][best.second] = false;
        report.removed.emplace_back(best.first, best.second, a(best.first, best.second));
    }
    return report;
}

int shd(const EdgeSet& predicted, const EdgeSet& truth) {
    if (predicted.m != truth.m) throw ShapeError("SHD: node counts differ");
    int edits = 0;
    for (int i = 0; i < predicted.m; ++i)
        for (int j = i + 1; j < predicted.m; ++j) {
            // pair state: bit 0 = i->j, bit 1 = j->i
            const int p = (predicted.has(i, j) ? 1 : 0) | (predicted.has(j, i) ? 2 : 0);
            const int t = (truth.has(i, j) ? 1 : 0) | (truth.has(j, i) ? 2 : 0);
            if (p == t) continue;
            if ((p == 1 && t == 2) || (p == 2 && t == 1)) {
                edits += 1;  // reversal
            } else {
                // otherwise only additions/removals bridge the two states
                edits += std::abs(((p & 1) + (p >> 1)) - ((t & 1) + (t >> 1)));
            }
        }
    return edits;
}

FdrResult fdr(const EdgeSet& predicted, const EdgeSet& truth) {
    if (predicted.m != truth.m) throw ShapeError("FDR: node counts differ");
    if (predicted.edges.empty()) return FdrResult{0.0, true};
    int bad = 0;
    for (auto [i, j] : predicted.edges) {
        if (truth.has(i, j)) continue;              // true positive
        ++bad;                                      // reversed or absent both ways
    }
    return FdrResult{static_cast<double>(bad) / predicted.edges.size(), false};
}

double bic_score(const Dataset& dataset, const EdgeSet& graph) {
    if (dataset.kind != DatasetKind::one_hot_discrete)
        throw DomainError("BIC scoring requires a discrete one-hot dataset");
    if (dataset.m() != graph.m) throw ShapeError("BIC: node counts differ");
    if (!is_acyclic_oracle(pattern_of(graph)))
        throw DomainError("BIC scoring requires an acyclic graph");
    const int m = dataset.m();
    const int d = dataset.d();
    const int n = dataset.n();

    // one-hot rows -> category indices
    std::vector<std::vector<int>> value(n, std::vector<int>(m));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < m; ++i) {
            int v = -1;
            for (int j = 0; j < d; ++j)
                if (dataset.samples[k](i, j) == 1.0) v = j;
            if (v < 0) throw DomainError("sample row is not one-hot");
            value[k][i] = v;
        }

    double loglik = 0.0;
    double free_params = 0.0;
    for (int j = 0; j < m; ++j) {
        std::vector<int> parents;
        for (int i = 0; i < m; ++i)
            if (graph.has(i, j)) parents.push_back(i);
        double configs = 1.0;
        for (size_t p = 0; p < parents.size(); ++p) configs *= d;
        free_params += (d - 1) * configs;

        std::map<std::vector<int>, std::vector<int>> counts;
        for (int k = 0; k < n; ++k) {
            std::vector<int> key(parents.size());
            for (size_t p = 0; p < parents.size(); ++p) key[p] = value[k][parents[p]];
            auto& row = counts[key];
            if (row.empty()) row.assign(d, 0);
            ++row[value[k][j]];
        }
        for (const auto& [key, row] : counts) {
            int total = 0;
            for (int c : row) total += c;
            for (int c : row)
                if (c > 0) loglik += c * std::log(static_cast<double>(c) / total);
        }
    }
    return loglik - 0.5 * std::log(static_cast<double>(n)) * free_params;
}

}  // namespace daggnn
