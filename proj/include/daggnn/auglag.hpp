#ifndef DAGGNN_AUGLAG_HPP
#define DAGGNN_AUGLAG_HPP

#include <functional>
#include <vector>

#include "daggnn/acyclicity.hpp"
#include "daggnn/tensor.hpp"

namespace daggnn {

struct AugLagState {
    double lambda = 0.0;
    double c = 1.0;
    double eta = 10.0;
    double gamma = 0.25;
    std::vector<double> h_history;
    int outer_iter = 0;
};

struct InnerSolverConfig {
    double step_size = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_steps = 300;
    double tolerance = 1e-6;  // on relative loss change of the best iterate
    int patience = 50;        // plateau length before the step size shrinks
    // minibatch objectives: loss values are noisy, so skip best-iterate
    // tracking and plateau decay and return the final iterate
    bool stochastic = false;
};

struct AugLagConfig {
    double eta = 10.0;
    double gamma = 0.25;
    double lambda0 = 0.0;
    double c0 = 1.0;
    double c_max = 1e16;
    double h_tolerance = 1e-8;
    int max_outer = 100;
    double constraint_c = 1.0;  // alpha = constraint_c / m
    double huber_coeff = 0.0;   // optional Huber penalty on A added to f
    double huber_delta = 1.0;
};

struct TrainLogRecord {
    int iter;
    double f;
    double h;
    double lambda;
    double c;
    double elapsed_seconds;
};

// The model-specific part of a training run: parameter values plus a closure
// that rebuilds the plain objective f on a fresh tape. params[0] is always the
// adjacency matrix A; diagonal gradients of masked parameters are zeroed and
// the diagonal itself pinned to zero after every step.
struct Problem {
    std::vector<Tensor> params;
    std::vector<bool> mask_diagonal;
    std::function<Tensor(Tape&, const std::vector<Tensor>&)> loss;
};

struct TrainResult {
    std::vector<Tensor> params;  // params[0] is the learned A
    AugLagState state;
    std::vector<TrainLogRecord> log;
    bool converged = false;
    double final_f = 0.0;
    double final_h = 0.0;
};

// f + lambda*h + (c/2) h^2, all on one tape.
Tensor augmented_lagrangian(Tape& tape, const Tensor& loss, const Tensor& h_value,
                            const AugLagState& state);

// Adam descent on the given objective until the step cap or until the best
// loss stops improving. Returns the best-seen iterate.
using ObjectiveFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
std::vector<Tensor> inner_solve(const ObjectiveFn& objective, std::vector<Tensor> params,
                                const std::vector<bool>& mask_diagonal,
                                const InnerSolverConfig& cfg);

// lambda += c*h; c *= eta when |h| fails to shrink by factor gamma.
void outer_step(AugLagState& state, double h_new);

TrainResult train(const Problem& problem, const AugLagConfig& cfg, const InnerSolverConfig& inner);

}  // namespace daggnn

#endif
