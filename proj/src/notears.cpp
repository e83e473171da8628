#include "daggnn/notears.hpp"

#include "daggnn/vae.hpp"

namespace daggnn {

Tensor least_squares_loss(Tape& tape, const Tensor& a, const Tensor& x_cols, int n) {
    if (a.rows() != a.cols() || a.rows() != x_cols.rows())
        throw ShapeError("least_squares_loss shape mismatch");
    Tensor system = tape.sub(tape.constant(Tensor::identity(a.rows())), tape.transpose(a));
    Tensor residual = tape.matmul(system, x_cols);
    return tape.scale(tape.sum(tape.square(residual)), 0.5 / n);
}

Problem notears_problem(const Dataset& dataset) {
    if (dataset.kind != DatasetKind::continuous)
        throw DomainError("the least-squares baseline requires continuous data");
    if (dataset.n() < 1) throw DomainError("empty dataset");
    const int m = dataset.m();
    const int n = dataset.n();
    auto x_cols = std::make_shared<Tensor>(stack_cols(dataset.samples));
    Problem problem;
    problem.params = {Tensor(m, m)};
    problem.mask_diagonal = {true};
    problem.loss = [x_cols, n](Tape& tape, const std::vector<Tensor>& leaves) {
        return least_squares_loss(tape, leaves[0], *x_cols, n);
    };
    return problem;
}

TrainResult train_notears(const Dataset& dataset, const AugLagConfig& cfg,
                          const InnerSolverConfig& inner) {
    return train(notears_problem(dataset), cfg, inner);
}

}  // namespace daggnn
