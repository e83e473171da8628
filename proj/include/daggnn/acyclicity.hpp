#ifndef DAGGNN_ACYCLICITY_HPP
#define DAGGNN_ACYCLICITY_HPP

#include <vector>

#include "daggnn/tensor.hpp"

namespace daggnn {

struct ConstraintConfig {
    double alpha;
    int m;
};

// Smooth acyclicity constraint tr[(I + alpha A∘A)^m] - m, zero exactly on DAGs.

// Records the constraint on an existing tape so it can join a training loss.
Tensor h_on_tape(Tape& tape, const Tensor& a, const ConstraintConfig& cfg);

double h_value(const Tensor& a, const ConstraintConfig& cfg);

// Gradient through the autodiff tape.
Tensor h_gradient(const Tensor& a, const ConstraintConfig& cfg);

// Closed form 2*alpha*m * A ∘ [(I + alpha A∘A)^{m-1}]^T, used to cross-check
// the tape gradient.
Tensor h_gradient_closed_form(const Tensor& a, const ConstraintConfig& cfg);

// alpha = c/m keeps (1 + alpha|lambda|)^m <= e^{c|lambda|}.
double choose_alpha(int m, double c = 1.0);

// Perron-Frobenius upper bound on the spectral radius of A∘A.
double max_row_sum_bound(const Tensor& a);

// Depth-first-search cycle detection on the boolean pattern; kept independent
// of the constraint computation so it can serve as its oracle.
bool is_acyclic_oracle(const std::vector<std::vector<bool>>& pattern);
bool is_acyclic_oracle(const Tensor& a, double edge_tol = 0.0);

}  // namespace daggnn

#endif
