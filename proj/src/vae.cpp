#include "daggnn/vae.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace daggnn {

namespace {

Tensor glorot_uniform(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor i_minus_a_transpose(Tape& tape, const Tensor& a) {
    return tape.sub(tape.constant(Tensor::identity(a.rows())), tape.transpose(a));
}

Tensor mlp(Tape& tape, const Tensor& x, const Tensor& w_in, const Tensor& w_out) {
    return tape.matmul(tape.relu(tape.matmul(x, w_in)), w_out);
}

}  // namespace

VaeParams VaeParams::init(const VaeConfig& cfg, uint64_t seed) {
    if (cfg.m < 2 || cfg.d < 1 || cfg.d_z < 1 || cfg.d_z > std::max(cfg.d, 1) || cfg.hidden < 1)
        throw DomainError("invalid VAE configuration");
    Rng rng(seed);
    VaeParams p{cfg,
                Tensor(cfg.m, cfg.m),  // zero A is a feasible DAG start
                glorot_uniform(cfg.d, cfg.hidden, rng),
                glorot_uniform(cfg.hidden, cfg.encoder_out_cols(), rng),
                glorot_uniform(cfg.d_z, cfg.hidden, rng),
                glorot_uniform(cfg.hidden, cfg.decoder_out_cols(), rng)};
    return p;
}

VaeParams VaeParams::from_vector(const VaeConfig& cfg, const std::vector<Tensor>& v) {
    if (v.size() != 5) throw ShapeError("expected 5 parameter tensors");
    return VaeParams{cfg, v[0], v[1], v[2], v[3], v[4]};
}

VaeLeaves VaeLeaves::from_span(const std::vector<Tensor>& leaves) {
    if (leaves.size() != 5) throw ShapeError("expected 5 parameter leaves");
    return VaeLeaves{leaves[0], leaves[1], leaves[2], leaves[3], leaves[4]};
}

EncodeResult encode(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p, const Tensor& x_stack,
                    int n) {
    if (x_stack.rows() != n * cfg.m || x_stack.cols() != cfg.d)
        throw ShapeError("encode expects a (n*m) x d sample stack");
    Tensor hidden = mlp(tape, x_stack, p.W1, p.W2);            // (n*m) x q
    Tensor wide = tape.blocks_to_cols(hidden, cfg.m);          // m x (n*q)
    Tensor mixed = tape.matmul(i_minus_a_transpose(tape, p.A), wide);
    const int q = cfg.encoder_out_cols();
    EncodeResult enc;
    if (cfg.variance == VarianceMode::learned) {
        enc.mean = tape.select_cols(mixed, q, 0, cfg.d_z);
        enc.log_std = tape.select_cols(mixed, q, cfg.d_z, cfg.d_z);
        enc.std_dev = tape.exp(enc.log_std);
        enc.learned_variance = true;
    } else {
        enc.mean = mixed;
        enc.std_dev = tape.constant(Tensor(cfg.m, n * cfg.d_z, 1.0));
        enc.learned_variance = false;
    }
    return enc;
}

Tensor reparameterize(Tape& tape, const EncodeResult& enc, Rng& rng) {
    Tensor eps = tape.constant(normal_matrix(enc.mean.rows(), enc.mean.cols(), rng));
    if (enc.learned_variance) return tape.add(enc.mean, tape.mul(enc.std_dev, eps));
    return tape.add(enc.mean, eps);
}

DecodeResult decode(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p, const Tensor& z,
                    int n) {
    if (z.rows() != cfg.m || z.cols() != n * cfg.d_z)
        throw ShapeError("decode expects an m x (n*d_z) latent stack");
    Tensor propagated;
    try {
        propagated = tape.solve_left(i_minus_a_transpose(tape, p.A), z);
    } catch (const SingularMatrixError&) {
        throw NumericError(
            "decode: (I - A^T) is numerically singular; A has drifted far from the DAG region "
            "(constraint violation)");
    }
    Tensor stacked = tape.cols_to_blocks(propagated, cfg.d_z);  // (n*m) x d_z
    Tensor out = mlp(tape, stacked, p.W3, p.W4);                // (n*m) x q'
    DecodeResult dec;
    dec.likelihood = cfg.likelihood;
    if (cfg.likelihood == Likelihood::categorical) {
        dec.probs = tape.row_softmax(out);
        return dec;
    }
    const int q = cfg.decoder_out_cols();
    if (cfg.variance == VarianceMode::learned) {
        dec.mean = tape.select_cols(out, q, 0, cfg.d);
        dec.log_std = tape.select_cols(out, q, cfg.d, cfg.d);
        dec.std_dev = tape.exp(dec.log_std);
        dec.learned_variance = true;
    } else {
        dec.mean = out;
        dec.learned_variance = false;
    }
    return dec;
}

Tensor kl_divergence(Tape& tape, const EncodeResult& enc) {
    Tensor mean_sq = tape.square(enc.mean);
    if (!enc.learned_variance) {
        // S = 1: KL reduces to 1/2 sum M^2
        return tape.scale(tape.sum(mean_sq), 0.5);
    }
    Tensor var = tape.square(enc.std_dev);
    Tensor inner = tape.add_scalar(
        tape.sub(tape.add(var, mean_sq), tape.scale(enc.log_std, 2.0)), -1.0);
    return tape.scale(tape.sum(inner), 0.5);
}

Tensor reconstruction_term(Tape& tape, const VaeConfig& cfg, const DecodeResult& dec,
                           const Tensor& x_stack, int* clamp_warnings) {
    if (cfg.likelihood == Likelihood::categorical) {
        if (x_stack.rows() != dec.probs.rows() || x_stack.cols() != dec.probs.cols())
            throw ShapeError("reconstruction_term shape mismatch");
        for (int i = 0; i < x_stack.rows(); ++i)
            for (int j = 0; j < x_stack.cols(); ++j) {
                const double v = x_stack(i, j);
                if (v != 0.0 && v != 1.0)
                    throw DomainError("categorical reconstruction requires one-hot samples");
                if (clamp_warnings && v == 1.0 && dec.probs(i, j) < 1e-12) ++*clamp_warnings;
            }
        Tensor safe = tape.clamp_min(dec.probs, 1e-12);
        return tape.sum(tape.mul(x_stack, tape.log(safe)));
    }
    if (x_stack.rows() != dec.mean.rows() || x_stack.cols() != dec.mean.cols())
        throw ShapeError("reconstruction_term shape mismatch");
    Tensor err_sq = tape.square(tape.sub(x_stack, dec.mean));
    if (!dec.learned_variance) return tape.scale(tape.sum(err_sq), -0.5);
    // -(X-M)^2 / (2 S^2) - log S, with 1/S^2 = exp(-2 log S)
    Tensor weighted = tape.scale(tape.mul(err_sq, tape.exp(tape.scale(dec.log_std, -2.0))), 0.5);
    return tape.negate(tape.sum(tape.add(weighted, dec.log_std)));
}

Tensor negative_elbo(Tape& tape, const VaeConfig& cfg, const VaeLeaves& p, const Tensor& x_stack,
                     int n, int mc_draws, Rng& rng, int* clamp_warnings) {
    if (n < 1) throw DomainError("negative_elbo requires a nonempty batch");
    if (mc_draws < 0) throw DomainError("negative_elbo: mc_draws must be nonnegative");
    EncodeResult enc = encode(tape, cfg, p, x_stack, n);
    Tensor kl = kl_divergence(tape, enc);
    Tensor recon;
    if (mc_draws == 0) {
        // plain-autoencoder variant: the posterior mean stands in for the draw
        DecodeResult dec = decode(tape, cfg, p, enc.mean, n);
        recon = reconstruction_term(tape, cfg, dec, x_stack, clamp_warnings);
    } else {
        for (int l = 0; l < mc_draws; ++l) {
            Tensor z = reparameterize(tape, enc, rng);
            DecodeResult dec = decode(tape, cfg, p, z, n);
            Tensor r = reconstruction_term(tape, cfg, dec, x_stack, clamp_warnings);
            recon = l == 0 ? r : tape.add(recon, r);
        }
        recon = tape.scale(recon, 1.0 / mc_draws);
    }
    return tape.scale(tape.sub(kl, recon), 1.0 / n);
}

Tensor identity_ablated_loss(Tape& tape, const Tensor& a, const Tensor& x_cols, int n) {
    Tensor system = i_minus_a_transpose(tape, a);
    Tensor z = tape.matmul(system, x_cols);
    Tensor xhat = tape.solve_left(system, z);
    Tensor recon_err = tape.scale(tape.sum(tape.square(tape.sub(x_cols, xhat))), 0.5);
    Tensor latent_reg = tape.scale(tape.sum(tape.square(z)), 0.5);
    return tape.scale(tape.add(recon_err, latent_reg), 1.0 / n);
}

Tensor stack_rows(const std::vector<Tensor>& samples) {
    if (samples.empty()) throw ShapeError("stack_rows: empty sample list");
    const int m = samples.front().rows(), d = samples.front().cols();
    Tensor out(static_cast<int>(samples.size()) * m, d);
    for (size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].rows() != m || samples[k].cols() != d)
            throw ShapeError("stack_rows: inconsistent sample shapes");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) out(static_cast<int>(k) * m + i, j) = samples[k](i, j);
    }
    return out;
}

Tensor stack_cols(const std::vector<Tensor>& samples) {
    if (samples.empty()) throw ShapeError("stack_cols: empty sample list");
    const int m = samples.front().rows(), d = samples.front().cols();
    Tensor out(m, static_cast<int>(samples.size()) * d);
    for (size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].rows() != m || samples[k].cols() != d)
            throw ShapeError("stack_cols: inconsistent sample shapes");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) out(i, static_cast<int>(k) * d + j) = samples[k](i, j);
    }
    return out;
}

namespace {

void write_matrix(std::ofstream& out, const char* name, const Tensor& t) {
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (int i = 0; i < t.rows(); ++i) {
        for (int j = 0; j < t.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(t(i, j));
        }
        out << '\n';
    }
}

Tensor read_matrix(std::ifstream& in, const std::string& expect_name) {
    std::string name;
    int rows, cols;
    if (!(in >> name >> rows >> cols) || name != expect_name)
        throw ParseError("checkpoint: expected matrix '" + expect_name + "'");
    Tensor t(rows, cols);
    for (double& v : t.values())
        if (!(in >> v)) throw ParseError("checkpoint: truncated matrix '" + expect_name + "'");
    return t;
}

}  // namespace

void save_checkpoint(const VaeParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    const VaeConfig& c = params.cfg;
    out << "daggnn-checkpoint v1\n";
    out << "m " << c.m << " d " << c.d << " d_z " << c.d_z << " hidden " << c.hidden << '\n';
    out << "likelihood " << (c.likelihood == Likelihood::gaussian ? "gaussian" : "categorical")
        << '\n';
    out << "variance " << (c.variance == VarianceMode::learned ? "learned" : "fixed-unit") << '\n';
    write_matrix(out, "A", params.A);
    write_matrix(out, "W1", params.W1);
    write_matrix(out, "W2", params.W2);
    write_matrix(out, "W3", params.W3);
    write_matrix(out, "W4", params.W4);
    if (!out) throw ParseError("write failure on " + path);
}

VaeParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string magic, version;
    if (!(in >> magic >> version) || magic != "daggnn-checkpoint" || version != "v1")
        throw ParseError(path + ": not a daggnn checkpoint");
    VaeConfig cfg;
    std::string key, value;
    if (!(in >> key >> cfg.m) || key != "m") throw ParseError(path + ": malformed header");
    if (!(in >> key >> cfg.d) || key != "d") throw ParseError(path + ": malformed header");
    if (!(in >> key >> cfg.d_z) || key != "d_z") throw ParseError(path + ": malformed header");
    if (!(in >> key >> cfg.hidden) || key != "hidden")
        throw ParseError(path + ": malformed header");
    if (!(in >> key >> value) || key != "likelihood")
        throw ParseError(path + ": malformed header");
    cfg.likelihood = value == "categorical" ? Likelihood::categorical : Likelihood::gaussian;
    if (!(in >> key >> value) || key != "variance") throw ParseError(path + ": malformed header");
    cfg.variance = value == "learned" ? VarianceMode::learned : VarianceMode::fixed_unit;
    VaeParams p{cfg, read_matrix(in, "A"), read_matrix(in, "W1"), read_matrix(in, "W2"),
                read_matrix(in, "W3"), read_matrix(in, "W4")};
    return p;
}

Problem vae_problem(const Dataset& dataset, const VaeConfig& cfg, uint64_t seed, int mc_draws,
                    int batch_size) {
    if (dataset.n() < 1) throw DomainError("empty dataset");
    if (dataset.m() != cfg.m || dataset.d() != cfg.d)
        throw ShapeError("dataset shape does not match the model configuration");
    const bool discrete = dataset.kind == DatasetKind::one_hot_discrete;
    if (discrete != (cfg.likelihood == Likelihood::categorical))
        throw DomainError("likelihood does not match the dataset kind");
    if (mc_draws < 0) throw DomainError("mc_draws must be nonnegative");
    if (batch_size < 0) throw DomainError("batch_size must be nonnegative");

    auto rng = std::make_shared<Rng>(seed + 0x9e3779b97f4a7c15ull);
    const int n = dataset.n();
    const int batch = (batch_size == 0 || batch_size >= n) ? 0 : batch_size;

    Problem problem;
    problem.params = VaeParams::init(cfg, seed).as_vector();
    problem.mask_diagonal = {true, false, false, false, false};
    if (batch == 0) {
        auto x_stack = std::make_shared<Tensor>(stack_rows(dataset.samples));
        problem.loss = [cfg, x_stack, rng, n, mc_draws](Tape& tape,
                                                        const std::vector<Tensor>& leaves) {
            VaeLeaves p = VaeLeaves::from_span(leaves);
            return negative_elbo(tape, cfg, p, *x_stack, n, mc_draws, *rng);
        };
    } else {
        auto samples = std::make_shared<std::vector<Tensor>>(dataset.samples);
        problem.loss = [cfg, samples, rng, n, batch, mc_draws](
                           Tape& tape, const std::vector<Tensor>& leaves) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            std::vector<Tensor> chosen;
            chosen.reserve(batch);
            for (int k = 0; k < batch; ++k) chosen.push_back((*samples)[pick(*rng)]);
            Tensor x_stack = stack_rows(chosen);
            VaeLeaves p = VaeLeaves::from_span(leaves);
            return negative_elbo(tape, cfg, p, x_stack, batch, mc_draws, *rng);
        };
    }
    return problem;
}

TrainResult train_vae(const Dataset& dataset, const VaeConfig& cfg, uint64_t seed,
                      const AugLagConfig& auglag, const InnerSolverConfig& inner, int mc_draws,
                      int batch_size) {
    return train(vae_problem(dataset, cfg, seed, mc_draws, batch_size), auglag, inner);
}

}  // namespace daggnn
