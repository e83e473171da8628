#ifndef DAGGNN_VAE_HPP
#define DAGGNN_VAE_HPP

#include <string>
#include <vector>

#include "daggnn/auglag.hpp"
#include "daggnn/datagen.hpp"
#include "daggnn/tensor.hpp"

namespace daggnn {

enum class Likelihood { gaussian, categorical };
enum class VarianceMode { learned, fixed_unit };

struct VaeConfig {
    int m = 0;
    int d = 1;
    int d_z = 1;
    int hidden = 16;
    Likelihood likelihood = Likelihood::gaussian;
    VarianceMode variance = VarianceMode::fixed_unit;

    int encoder_out_cols() const {
        return variance == VarianceMode::learned ? 2 * d_z : d_z;
    }
    int decoder_out_cols() const {
        return (likelihood == Likelihood::gaussian && variance == VarianceMode::learned) ? 2 * d
                                                                                        : d;
    }
};

// A plus the two MLP weight pairs; A keeps a structurally zero diagonal.
struct VaeParams {
    VaeConfig cfg;
    Tensor A;   // m x m
    Tensor W1;  // d x hidden
    Tensor W2;  // hidden x encoder_out_cols
    Tensor W3;  // d_z x hidden
    Tensor W4;  // hidden x decoder_out_cols

    static VaeParams init(const VaeConfig& cfg, uint64_t seed);

    std::vector<Tensor> as_vector() const { return {A, W1, W2, W3, W4}; }
    static VaeParams from_vector(const VaeConfig& cfg, const std::vector<Tensor>& v);
};

// Tape leaves for one forward pass, in the same order as as_vector().
struct VaeLeaves {
    Tensor A, W1, W2, W3, W4;
    static VaeLeaves from_span(const std::vector<Tensor>& leaves);
};

// Batched layouts: encoder input is the vertical stack of n samples
// ((n*m) x d); latent matrices are m x (n*d_z) with sample k in columns
// [k*d_z, (k+1)*d_z). n=1 recovers the single-sample contracts.
struct EncodeResult {
    Tensor mean;     // m x (n*d_z)
    Tensor std_dev;  // m x (n*d_z), all ones in fixed-unit mode
    Tensor log_std;  // only valid when learned
    bool learned_variance = false;
};

struct DecodeResult {
    Likelihood likelihood;
    Tensor mean;     // gaussian: (n*m) x d
    Tensor std_dev;  // gaussian learned
    Tensor log_std;
    Tensor probs;  // categorical: (n*m) x d, rows sum to 1
    bool learned_variance = false;
};

EncodeResult encode(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p, const Tensor& x_stack,
                    int n = 1);

Tensor reparameterize(Tape& tape, const EncodeResult& enc, Rng& rng);

DecodeResult decode(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p, const Tensor& z,
                    int n = 1);

// Closed-form KL against the standard normal prior, summed over all entries.
Tensor kl_divergence(Tape& tape, const EncodeResult& enc);

// Log-likelihood term summed over all entries (additive constant dropped).
// clamp_warnings counts categorical probabilities clamped at 1e-12 under an
// "on" indicator.
Tensor reconstruction_term(Tape& tape, const VaeConfig& cfg, const DecodeResult& dec,
                           const Tensor& x_stack, int* clamp_warnings = nullptr);

// Mean over the batch of [KL - reconstruction], with L Monte Carlo draws.
Tensor negative_elbo(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p,
                     const Tensor& x_stack, int n, int mc_draws, Rng& rng,
                     int* clamp_warnings = nullptr);

// Deterministic autoencoder with f1..f4 identities and unit variances; reduces
// to the linear least-squares loss. x_cols is the m x (n*d) column stack.
Tensor identity_ablated_loss(Tape& tape, const Tensor& a, const Tensor& x_cols, int n);

// Sample stacking helpers.
Tensor stack_rows(const std::vector<Tensor>& samples);  // (n*m) x d
Tensor stack_cols(const std::vector<Tensor>& samples);  // m x (n*d)

void save_checkpoint(const VaeParams& params, const std::string& path);
VaeParams load_checkpoint(const std::string& path);

// Trainable problem over the negative ELBO; the seed fixes both the parameter
// initialization and the reparameterization noise stream, so identical calls
// produce identical trajectories. batch_size > 0 evaluates the loss on a
// fresh random minibatch per call (pair with InnerSolverConfig::stochastic).
Problem vae_problem(const Dataset& dataset, const VaeConfig& cfg, uint64_t seed,
                    int mc_draws = 1, int batch_size = 0);

TrainResult train_vae(const Dataset& dataset, const VaeConfig& cfg, uint64_t seed,
                      const AugLagConfig& auglag, const InnerSolverConfig& inner,
                      int mc_draws = 1, int batch_size = 0);

}  // namespace daggnn

#endif
