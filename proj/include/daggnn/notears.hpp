#ifndef DAGGNN_NOTEARS_HPP
#define DAGGNN_NOTEARS_HPP

#include "daggnn/auglag.hpp"
#include "daggnn/datagen.hpp"
#include "daggnn/tensor.hpp"

namespace daggnn {

// Linear-SEM least-squares objective (1/n) sum_k 1/2 ||(I - A^T) X^k||_F^2.
// x_cols is the m x (n*d) column stack of the dataset.
Tensor least_squares_loss(Tape& tape, const Tensor& a, const Tensor& x_cols, int n);

// Builds the one-parameter problem {A} over the dataset; rejects discrete data.
Problem notears_problem(const Dataset& dataset);

TrainResult train_notears(const Dataset& dataset, const AugLagConfig& cfg,
                          const InnerSolverConfig& inner);

}  // namespace daggnn

#endif
