#include "daggnn/acyclicity.hpp"

#include <cmath>
#include <string>

namespace daggnn {

Tensor h_on_tape(Tape& tape, const Tensor& a, const ConstraintConfig& cfg) {
    if (a.rows() != a.cols()) throw ShapeError("h(A) requires a square matrix");
    if (cfg.alpha <= 0.0) throw DomainError("alpha must be positive");
    Tensor b = tape.square(a);
    Tensor base = tape.add(tape.constant(Tensor::identity(cfg.m)), tape.scale(b, cfg.alpha));
    Tensor powered = tape.matrix_power(base, cfg.m);
    return tape.add_scalar(tape.trace(powered), -static_cast<double>(cfg.m));
}

double h_value(const Tensor& a, const ConstraintConfig& cfg) {
    Tape tape;
    try {
        return h_on_tape(tape, a, cfg)(0, 0);
    } catch (const NumericError&) {
        throw NumericError("overflow while evaluating h(A); use a smaller alpha (alpha = c/m "
                           "with smaller c keeps the powers bounded by e^{c|lambda|})");
    }
}

Tensor h_gradient(const Tensor& a, const ConstraintConfig& cfg) {
    Tape tape;
    Tensor leaf = tape.parameter(a);
    Tensor h = h_on_tape(tape, leaf, cfg);
    auto grads = tape.backward(h);
    return grads.at(leaf.node());
}

Tensor h_gradient_closed_form(const Tensor& a, const ConstraintConfig& cfg) {
    const int m = cfg.m;
    Tensor base = Tensor::identity(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) base(i, j) += cfg.alpha * a(i, j) * a(i, j);
    Tensor powered = Tensor::identity(m);
    for (int k = 0; k < m - 1; ++k) powered = plain_matmul(powered, base);
    Tensor grad(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            grad(i, j) = 2.0 * cfg.alpha * m * a(i, j) * powered(j, i);
    return grad;
}

double choose_alpha(int m, double c) {
    if (m < 1) throw DomainError("choose_alpha requires m >= 1");
    return c / static_cast<double>(m);
}

double max_row_sum_bound(const Tensor& a) {
    double worst = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < a.cols(); ++j) row += a(i, j) * a(i, j);
        worst = std::max(worst, row);
    }
    return worst;
}

namespace {

enum class Mark { unvisited, in_stack, done };

bool dfs_has_cycle(int node, const std::vector<std::vector<bool>>& adj, std::vector<Mark>& mark) {
    mark[node] = Mark::in_stack;
    const int m = static_cast<int>(adj.size());
    for (int next = 0; next < m; ++next) {
        if (!adj[node][next]) continue;
        if (mark[next] == Mark::in_stack) return true;
        if (mark[next] == Mark::unvisited && dfs_has_cycle(next, adj, mark)) return true;
    }
    mark[node] = Mark::done;
    return false;
}

}  // namespace

bool is_acyclic_oracle(const std::vector<std::vector<bool>>& pattern) {
    const int m = static_cast<int>(pattern.size());
    std::vector<Mark> mark(m, Mark::unvisited);
    for (int i = 0; i < m; ++i)
        if (mark[i] == Mark::unvisited && dfs_has_cycle(i, pattern, mark)) return false;
    return true;
}

bool is_acyclic_oracle(const Tensor& a, double edge_tol) {
    const int m = a.rows();
    std::vector<std::vector<bool>> pattern(m, std::vector<bool>(m, false));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) pattern[i][j] = std::fabs(a(i, j)) > edge_tol;
    return is_acyclic_oracle(pattern);
}

}  // namespace daggnn
