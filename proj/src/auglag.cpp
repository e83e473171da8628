#include "daggnn/auglag.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace daggnn {

Tensor augmented_lagrangian(Tape& tape, const Tensor& loss, const Tensor& h_value,
                            const AugLagState& state) {
    if (loss.rows() != 1 || loss.cols() != 1 || h_value.rows() != 1 || h_value.cols() != 1)
        throw ShapeError("augmented_lagrangian expects scalar inputs");
    if (loss.node() < 0 || h_value.node() < 0)
        throw TapeError("augmented_lagrangian inputs must live on the tape");
    Tensor penalty = tape.add(tape.scale(h_value, state.lambda),
                              tape.scale(tape.square(h_value), 0.5 * state.c));
    return tape.add(loss, penalty);
}

namespace {

void zero_diagonal(Tensor& t) {
    const int n = std::min(t.rows(), t.cols());
    for (int i = 0; i < n; ++i) t(i, i) = 0.0;
}

}  // namespace

std::vector<Tensor> inner_solve(const ObjectiveFn& objective, std::vector<Tensor> params,
                                const std::vector<bool>& mask_diagonal,
                                const InnerSolverConfig& cfg) {
    const size_t np = params.size();
    for (size_t p = 0; p < np; ++p) {
        params[p] = params[p].clone();
        if (p < mask_diagonal.size() && mask_diagonal[p]) zero_diagonal(params[p]);
    }
    std::vector<std::vector<double>> m1(np), m2(np);
    for (size_t p = 0; p < np; ++p) {
        m1[p].assign(params[p].size(), 0.0);
        m2[p].assign(params[p].size(), 0.0);
    }

    std::vector<Tensor> best;
    double best_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    const int patience = cfg.patience;
    double lr = cfg.step_size;
    int adam_step = 0;

    for (int step = 1; step <= cfg.max_steps; ++step) {
        Tape tape;
        std::vector<Tensor> leaves;
        leaves.reserve(np);
        for (const Tensor& p : params) leaves.push_back(tape.parameter(p));
        Tensor loss = objective(tape, leaves);
        const double loss_value = loss(0, 0);
        if (!std::isfinite(loss_value))
            throw NumericError("inner solver: non-finite loss at step " + std::to_string(step));
        if (loss_value < best_loss - cfg.tolerance * (1.0 + std::fabs(best_loss)))
            stale = 0;
        else
            ++stale;
        if (!cfg.stochastic && loss_value < best_loss) {
            best_loss = loss_value;
            best.clear();
            for (const Tensor& p : params) best.push_back(p.clone());
        }
        if (!cfg.stochastic && stale > patience && best.size() == np) {
            // plateau: restart from the best iterate with a smaller step
            lr *= 0.25;
            if (lr < cfg.step_size * 1e-4) break;
            for (size_t p = 0; p < np; ++p) {
                params[p] = best[p].clone();
                std::fill(m1[p].begin(), m1[p].end(), 0.0);
                std::fill(m2[p].begin(), m2[p].end(), 0.0);
            }
            adam_step = 0;
            stale = 0;
            continue;
        }
        auto grads = tape.backward(loss);
        ++adam_step;
        const double corr1 = 1.0 - std::pow(cfg.beta1, adam_step);
        const double corr2 = 1.0 - std::pow(cfg.beta2, adam_step);
        for (size_t p = 0; p < np; ++p) {
            auto it = grads.find(leaves[p].node());
            if (it == grads.end()) continue;  // no gradient flow, leave untouched
            const auto& g = it->second.values();
            auto& vals = params[p].values();
            for (size_t i = 0; i < g.size(); ++i) {
                m1[p][i] = cfg.beta1 * m1[p][i] + (1.0 - cfg.beta1) * g[i];
                m2[p][i] = cfg.beta2 * m2[p][i] + (1.0 - cfg.beta2) * g[i] * g[i];
                vals[i] -= lr * (m1[p][i] / corr1) /
                           (std::sqrt(m2[p][i] / corr2) + cfg.epsilon);
            }
            if (p < mask_diagonal.size() && mask_diagonal[p]) zero_diagonal(params[p]);
        }
    }
    if (best.size() != np) best = params;
    return best;
}

void outer_step(AugLagState& state, double h_new) {
    if (!std::isfinite(h_new)) throw NumericError("outer_step: non-finite constraint value");
    state.lambda += state.c * h_new;
    if (!state.h_history.empty() &&
        std::fabs(h_new) > state.gamma * std::fabs(state.h_history.back()))
        state.c *= state.eta;
    state.h_history.push_back(h_new);
    ++state.outer_iter;
}

TrainResult train(const Problem& problem, const AugLagConfig& cfg,
                  const InnerSolverConfig& inner) {
    if (problem.params.empty()) throw DomainError("train: no parameters");
    const Tensor& a0 = problem.params.front();
    if (a0.rows() != a0.cols()) throw ShapeError("train: params[0] must be the square A");
    const int m = a0.rows();
    const ConstraintConfig ccfg{cfg.constraint_c / m, m};

    TrainResult result;
    result.params = problem.params;
    for (Tensor& p : result.params) p = p.clone();
    result.state.lambda = cfg.lambda0;
    result.state.c = cfg.c0;
    result.state.eta = cfg.eta;
    result.state.gamma = cfg.gamma;

    const auto t0 = std::chrono::steady_clock::now();
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        const AugLagState snapshot = result.state;
        ObjectiveFn objective = [&](Tape& tape, const std::vector<Tensor>& leaves) {
            Tensor f = problem.loss(tape, leaves);
            if (cfg.huber_coeff > 0.0)
                f = tape.add(f, tape.scale(tape.sum(tape.huber(leaves[0], cfg.huber_delta)),
                                           cfg.huber_coeff));
            Tensor h = h_on_tape(tape, leaves[0], ccfg);
            return augmented_lagrangian(tape, f, h, snapshot);
        };
        result.params = inner_solve(objective, result.params, problem.mask_diagonal, inner);

        // log f and h at the accepted iterate
        double f_value, h_value_now;
        {
            Tape tape;
            std::vector<Tensor> leaves;
            for (const Tensor& p : result.params) leaves.push_back(tape.constant(p));
            f_value = problem.loss(tape, leaves)(0, 0);
            h_value_now = h_on_tape(tape, leaves[0], ccfg)(0, 0);
        }
        outer_step(result.state, h_value_now);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // lambda and c are the values the subproblem was solved under
        result.log.push_back(
            TrainLogRecord{outer, f_value, h_value_now, snapshot.lambda, snapshot.c, elapsed});
        result.final_f = f_value;
        result.final_h = h_value_now;
        if (h_value_now <= cfg.h_tolerance) {
            result.converged = true;
            break;
        }
        if (result.state.c > cfg.c_max) break;  // penalty exhausted, report as not converged
    }
    return result;
}

}  // namespace daggnn
