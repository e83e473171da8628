#include "daggnn/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace daggnn {

Tensor::Tensor(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0)
        throw ShapeError("Tensor dimensions must be positive, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    data_ = std::make_shared<std::vector<double>>(static_cast<size_t>(rows) * cols, fill);
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = static_cast<int>(init.size());
    cols_ = rows_ > 0 ? static_cast<int>(init.begin()->size()) : 0;
    if (rows_ == 0 || cols_ == 0) throw ShapeError("empty initializer for Tensor");
    data_ = std::make_shared<std::vector<double>>();
    data_->reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& row : init) {
        if (static_cast<int>(row.size()) != cols_)
            throw ShapeError("ragged initializer for Tensor");
        data_->insert(data_->end(), row.begin(), row.end());
    }
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.rows_ = rows_;
    t.cols_ = cols_;
    t.data_ = std::make_shared<std::vector<double>>(*data_);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : *data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : *data_) m = std::max(m, std::fabs(v));
    return m;
}

Tensor normal_matrix(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

namespace {

void check_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

void matmul_into(const Tensor& a, const Tensor& b, double* out, bool accumulate) {
    const int p = a.rows(), q = a.cols(), r = b.cols();
    const double* av = a.values().data();
    const double* bv = b.values().data();
    if (!accumulate)
        for (int i = 0; i < p * r; ++i) out[i] = 0.0;
    for (int i = 0; i < p; ++i) {
        const double* arow = av + static_cast<size_t>(i) * q;
        double* orow = out + static_cast<size_t>(i) * r;
        for (int k = 0; k < q; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = bv + static_cast<size_t>(k) * r;
            for (int j = 0; j < r; ++j) orow[j] += aik * brow[j];
        }
    }
}

}  // namespace

Tensor plain_matmul(const Tensor& a, const Tensor& b) {
    check_shape(a.cols() == b.rows(), "matmul inner dimensions disagree: " +
                                          std::to_string(a.cols()) + " vs " +
                                          std::to_string(b.rows()));
    Tensor out(a.rows(), b.cols());
    matmul_into(a, b, out.values().data(), false);
    return out;
}

Tensor plain_transpose(const Tensor& t) {
    Tensor out(t.cols(), t.rows());
    for (int i = 0; i < t.rows(); ++i)
        for (int j = 0; j < t.cols(); ++j) out(j, i) = t(i, j);
    return out;
}

LuFactors lu_factor(const Tensor& m, double singular_tol) {
    check_shape(m.rows() == m.cols(), "lu_factor requires a square matrix");
    const int n = m.rows();
    LuFactors f{m.clone(), std::vector<int>(n), 0.0};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    Tensor& a = f.lu;
    const double scale = std::max(m.max_abs(), 1.0);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::fabs(a(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best < singular_tol * scale)
            throw SingularMatrixError("singular matrix in LU factorization at pivot " +
                                          std::to_string(k),
                                      k);
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        const double d = a(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = a(i, k) / d;
            a(i, k) = l;
            if (l != 0.0)
                for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    double umax = 0.0, umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double u = std::fabs(a(i, i));
        umax = std::max(umax, u);
        umin = std::min(umin, u);
    }
    f.cond_estimate = umin > 0.0 ? umax / umin : std::numeric_limits<double>::infinity();
    return f;
}

Tensor lu_solve(const LuFactors& f, const Tensor& b) {
    const int n = f.lu.rows();
    check_shape(b.rows() == n, "lu_solve dimension mismatch");
    const int q = b.cols();
    Tensor x(n, q);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) x(i, j) = b(f.perm[i], j);
    // forward substitution with unit-diagonal L
    for (int i = 1; i < n; ++i)
        for (int k = 0; k < i; ++k) {
            const double l = f.lu(i, k);
            if (l != 0.0)
                for (int j = 0; j < q; ++j) x(i, j) -= l * x(k, j);
        }
    // back substitution with U
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) {
            const double u = f.lu(i, k);
            if (u != 0.0)
                for (int j = 0; j < q; ++j) x(i, j) -= u * x(k, j);
        }
        const double d = f.lu(i, i);
        for (int j = 0; j < q; ++j) x(i, j) /= d;
    }
    return x;
}

Tensor lu_solve_transposed(const LuFactors& f, const Tensor& g) {
    // With P m = L U we have m^T = U^T L^T P, so solve U^T y = g, L^T w = y,
    // then undo the permutation.
    const int n = f.lu.rows();
    check_shape(g.rows() == n, "lu_solve_transposed dimension mismatch");
    const int q = g.cols();
    Tensor y = g.clone();
    for (int i = 0; i < n; ++i) {
        const double d = f.lu(i, i);
        for (int j = 0; j < q; ++j) y(i, j) /= d;
        for (int k = i + 1; k < n; ++k) {
            const double u = f.lu(i, k);
            if (u != 0.0)
                for (int j = 0; j < q; ++j) y(k, j) -= u * y(i, j);
        }
    }
    for (int i = n - 1; i >= 0; --i)
        for (int k = i + 1; k < n; ++k) {
            const double l = f.lu(k, i);
            if (l != 0.0)
                for (int j = 0; j < q; ++j) y(i, j) -= l * y(k, j);
        }
    Tensor x(n, q);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) x(f.perm[i], j) = y(i, j);
    return x;
}

int Tape::record(Tensor value, std::function<void(Tape&)> pull, bool is_param) {
    if (!value.all_finite())
        throw NumericError("non-finite value produced at tape node " +
                           std::to_string(nodes_.size()));
    const int id = static_cast<int>(nodes_.size());
    value.node_ = id;
    nodes_.push_back(Node{std::move(value), is_param, std::move(pull)});
    return id;
}

int Tape::ensure(const Tensor& t) {
    if (t.node() >= 0) {
        if (t.node() >= static_cast<int>(nodes_.size()))
            throw TapeError("tensor belongs to a different tape");
        return t.node();
    }
    Tensor copy = t;
    return record(std::move(copy), nullptr);
}

std::vector<double>& Tape::grad_buf(int node) {
    auto& g = grads_[node];
    if (g.empty()) g.assign(nodes_[node].value.size(), 0.0);
    return g;
}

Tensor Tape::parameter(const Tensor& t) {
    Tensor copy = t.clone();
    int id = record(std::move(copy), nullptr, true);
    return nodes_[id].value;
}

Tensor Tape::constant(const Tensor& t) {
    Tensor copy = t;
    int id = record(std::move(copy), nullptr, false);
    return nodes_[id].value;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    check_shape(a.cols() == b.rows(), "matmul inner dimensions disagree: " +
                                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                          " * " + std::to_string(b.rows()) + "x" +
                                          std::to_string(b.cols()));
    const int ia = ensure(a), ib = ensure(b);
    Tensor out(a.rows(), b.cols());
    matmul_into(nodes_[ia].value, nodes_[ib].value, out.values().data(), false);
    const int p = a.rows(), q = a.cols(), r = b.cols();
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, ib, p, q, r](Tape& t) {
        const std::vector<double>& g = t.grads_[id];
        if (g.empty()) return;
        const Tensor& av = t.value_of(ia);
        const Tensor& bv = t.value_of(ib);
        {  // a_grad += g . b^T
            std::vector<double>& ga = t.grad_buf(ia);
            const double* gv = g.data();
            const double* bb = bv.values().data();
            for (int i = 0; i < p; ++i)
                for (int k = 0; k < q; ++k) {
                    double s = 0.0;
                    const double* grow = gv + static_cast<size_t>(i) * r;
                    const double* brow = bb + static_cast<size_t>(k) * r;
                    for (int j = 0; j < r; ++j) s += grow[j] * brow[j];
                    ga[static_cast<size_t>(i) * q + k] += s;
                }
        }
        {  // b_grad += a^T . g
            std::vector<double>& gb = t.grad_buf(ib);
            const double* gv = g.data();
            const double* aa = av.values().data();
            for (int k = 0; k < q; ++k) {
                double* grow_out = gb.data() + static_cast<size_t>(k) * r;
                for (int i = 0; i < p; ++i) {
                    const double aik = aa[static_cast<size_t>(i) * q + k];
                    if (aik == 0.0) continue;
                    const double* grow = gv + static_cast<size_t>(i) * r;
                    for (int j = 0; j < r; ++j) grow_out[j] += aik * grow[j];
                }
            }
        }
    };
    return nodes_[id].value;
}

Tensor Tape::solve_left(const Tensor& m, const Tensor& b) {
    check_shape(m.rows() == m.cols(), "solve_left requires a square matrix");
    check_shape(m.rows() == b.rows(), "solve_left dimension mismatch");
    const int im = ensure(m), ib = ensure(b);
    auto factors = std::make_shared<LuFactors>(lu_factor(nodes_[im].value));
    if (factors->cond_estimate > cond_cap_)
        throw SingularMatrixError(
            "matrix in solve_left is numerically singular (condition estimate " +
                std::to_string(factors->cond_estimate) + ")",
            -1);
    if (factors->cond_estimate > cond_warn_threshold_) ++ill_cond_warnings_;
    Tensor y = lu_solve(*factors, nodes_[ib].value);
    int id = record(std::move(y), nullptr);
    nodes_[id].pull = [id, im, ib, factors](Tape& t) {
        const std::vector<double>& g = t.grads_[id];
        if (g.empty()) return;
        const Tensor& yv = t.value_of(id);
        Tensor gt(yv.rows(), yv.cols());
        gt.values() = g;
        // b_grad = m^{-T} g; m_grad = -b_grad . y^T
        Tensor gb = lu_solve_transposed(*factors, gt);
        {
            std::vector<double>& acc = t.grad_buf(ib);
            const auto& v = gb.values();
            for (size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
        }
        {
            std::vector<double>& acc = t.grad_buf(im);
            const int n = yv.rows(), q = yv.cols();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < q; ++k) s += gb(i, k) * yv(j, k);
                    acc[static_cast<size_t>(i) * n + j] -= s;
                }
        }
    };
    return nodes_[id].value;
}

namespace {
// Shared shape check for binary elementwise ops.
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + " shape mismatch: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}
}  // namespace

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    const int ia = ensure(a), ib = ensure(b);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    const auto& bv = nodes_[ib].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] + bv[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, ib](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return nodes_[id].value;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    const int ia = ensure(a), ib = ensure(b);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    const auto& bv = nodes_[ib].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] - bv[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, ib](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    };
    return nodes_[id].value;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    const int ia = ensure(a), ib = ensure(b);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    const auto& bv = nodes_[ib].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] * bv[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, ib](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        const auto& bv = t.value_of(ib).values();
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * bv[i];
            gb[i] += g[i] * av[i];
        }
    };
    return nodes_[id].value;
}

Tensor Tape::square(const Tensor& a) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] * av[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * av[i] * g[i];
    };
    return nodes_[id].value;
}

Tensor Tape::relu(const Tensor& a) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] > 0.0 ? av[i] : 0.0;
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        auto& ga = t.grad_buf(ia);
        // subgradient at exactly 0 is 0
        for (size_t i = 0; i < g.size(); ++i)
            if (av[i] > 0.0) ga[i] += g[i];
    };
    return nodes_[id].value;
}

Tensor Tape::exp(const Tensor& a) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = std::exp(av[i]);
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& ov = t.value_of(id).values();
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ov[i];
    };
    return nodes_[id].value;
}

Tensor Tape::log(const Tensor& a) {
    const int ia = ensure(a);
    const auto& av = nodes_[ia].value.values();
    for (double v : av)
        if (v <= 0.0) throw DomainError("log requires strictly positive input");
    Tensor out(a.rows(), a.cols());
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = std::log(av[i]);
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
    };
    return nodes_[id].value;
}

Tensor Tape::negate(const Tensor& a) { return scale(a, -1.0); }

Tensor Tape::scale(const Tensor& a, double s) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = s * av[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, s](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    };
    return nodes_[id].value;
}

Tensor Tape::add_scalar(const Tensor& a, double s) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] + s;
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
    return nodes_[id].value;
}

Tensor Tape::clamp_min(const Tensor& a, double lo) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) out.values()[i] = av[i] < lo ? lo : av[i];
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, lo](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i)
            if (av[i] > lo) ga[i] += g[i];
    };
    return nodes_[id].value;
}

Tensor Tape::huber(const Tensor& a, double delta) {
    const int ia = ensure(a);
    Tensor out(a.rows(), a.cols());
    const auto& av = nodes_[ia].value.values();
    for (size_t i = 0; i < av.size(); ++i) {
        const double x = std::fabs(av[i]);
        out.values()[i] = x <= delta ? 0.5 * x * x : delta * (x - 0.5 * delta);
    }
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, delta](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const auto& av = t.value_of(ia).values();
        auto& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.size(); ++i) {
            const double clipped = std::max(-delta, std::min(delta, av[i]));
            ga[i] += g[i] * clipped;
        }
    };
    return nodes_[id].value;
}

Tensor Tape::row_softmax(const Tensor& a) {
    const int ia = ensure(a);
    const Tensor& av = nodes_[ia].value;
    Tensor out(a.rows(), a.cols());
    const int r = a.rows(), c = a.cols();
    for (int i = 0; i < r; ++i) {
        double mx = av(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, av(i, j));
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            const double e = std::exp(av(i, j) - mx);
            out(i, j) = e;
            s += e;
        }
        for (int j = 0; j < c; ++j) out(i, j) /= s;
    }
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, r, c](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        const Tensor& y = t.value_of(id);
        auto& ga = t.grad_buf(ia);
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += y(i, j) * g[static_cast<size_t>(i) * c + j];
            for (int j = 0; j < c; ++j)
                ga[static_cast<size_t>(i) * c + j] +=
                    y(i, j) * (g[static_cast<size_t>(i) * c + j] - dot);
        }
    };
    return nodes_[id].value;
}

Tensor Tape::transpose(const Tensor& a) {
    const int ia = ensure(a);
    Tensor out = plain_transpose(nodes_[ia].value);
    const int r = a.rows(), c = a.cols();
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, r, c](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                ga[static_cast<size_t>(i) * c + j] += g[static_cast<size_t>(j) * r + i];
    };
    return nodes_[id].value;
}

Tensor Tape::trace(const Tensor& a) {
    check_shape(a.rows() == a.cols(), "trace requires a square matrix");
    const int ia = ensure(a);
    const Tensor& av = nodes_[ia].value;
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) s += av(i, i);
    Tensor out(1, 1);
    out(0, 0) = s;
    const int n = a.rows();
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, n](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        for (int i = 0; i < n; ++i) ga[static_cast<size_t>(i) * n + i] += g[0];
    };
    return nodes_[id].value;
}

Tensor Tape::sum(const Tensor& a) {
    const int ia = ensure(a);
    double s = 0.0;
    for (double v : nodes_[ia].value.values()) s += v;
    Tensor out(1, 1);
    out(0, 0) = s;
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        for (double& v : ga) v += g[0];
    };
    return nodes_[id].value;
}

Tensor Tape::matrix_power(const Tensor& a, int k) {
    check_shape(a.rows() == a.cols(), "matrix_power requires a square matrix");
    if (k < 1) throw ShapeError("matrix_power exponent must be >= 1");
    // exponentiation by squaring, recorded as ordinary matmuls
    Tensor base = nodes_[ensure(a)].value;
    Tensor result;
    bool have_result = false;
    while (k > 0) {
        if (k & 1) {
            result = have_result ? matmul(result, base) : base;
            have_result = true;
        }
        k >>= 1;
        if (k > 0) base = matmul(base, base);
    }
    return result;
}

Tensor Tape::blocks_to_cols(const Tensor& a, int block_rows) {
    if (block_rows <= 0 || a.rows() % block_rows != 0)
        throw ShapeError("blocks_to_cols: row count not a multiple of block_rows");
    const int nblocks = a.rows() / block_rows;
    const int k = a.cols();
    const int ia = ensure(a);
    const Tensor& av = nodes_[ia].value;
    Tensor out(block_rows, nblocks * k);
    for (int b = 0; b < nblocks; ++b)
        for (int r = 0; r < block_rows; ++r)
            for (int c = 0; c < k; ++c) out(r, b * k + c) = av(b * block_rows + r, c);
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, nblocks, block_rows, k](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        const int out_cols = nblocks * k;
        for (int b = 0; b < nblocks; ++b)
            for (int r = 0; r < block_rows; ++r)
                for (int c = 0; c < k; ++c)
                    ga[(static_cast<size_t>(b) * block_rows + r) * k + c] +=
                        g[static_cast<size_t>(r) * out_cols + b * k + c];
    };
    return nodes_[id].value;
}

Tensor Tape::cols_to_blocks(const Tensor& a, int block_cols) {
    if (block_cols <= 0 || a.cols() % block_cols != 0)
        throw ShapeError("cols_to_blocks: column count not a multiple of block_cols");
    const int nblocks = a.cols() / block_cols;
    const int m = a.rows();
    const int ia = ensure(a);
    const Tensor& av = nodes_[ia].value;
    Tensor out(nblocks * m, block_cols);
    for (int b = 0; b < nblocks; ++b)
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < block_cols; ++c) out(b * m + r, c) = av(r, b * block_cols + c);
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, nblocks, block_cols, m](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        const int in_cols = nblocks * block_cols;
        for (int b = 0; b < nblocks; ++b)
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < block_cols; ++c)
                    ga[static_cast<size_t>(r) * in_cols + b * block_cols + c] +=
                        g[(static_cast<size_t>(b) * m + r) * block_cols + c];
    };
    return nodes_[id].value;
}

Tensor Tape::select_cols(const Tensor& a, int stride, int offset, int count) {
    if (stride <= 0 || a.cols() % stride != 0)
        throw ShapeError("select_cols: column count not a multiple of stride");
    if (offset < 0 || count <= 0 || offset + count > stride)
        throw ShapeError("select_cols: [offset, offset+count) outside the stride block");
    const int nblocks = a.cols() / stride;
    const int m = a.rows();
    const int ia = ensure(a);
    const Tensor& av = nodes_[ia].value;
    Tensor out(m, nblocks * count);
    for (int r = 0; r < m; ++r)
        for (int b = 0; b < nblocks; ++b)
            for (int c = 0; c < count; ++c) out(r, b * count + c) = av(r, b * stride + offset + c);
    int id = record(std::move(out), nullptr);
    nodes_[id].pull = [id, ia, nblocks, stride, offset, count, m](Tape& t) {
        const auto& g = t.grads_[id];
        if (g.empty()) return;
        auto& ga = t.grad_buf(ia);
        const int in_cols = nblocks * stride;
        const int out_cols = nblocks * count;
        for (int r = 0; r < m; ++r)
            for (int b = 0; b < nblocks; ++b)
                for (int c = 0; c < count; ++c)
                    ga[static_cast<size_t>(r) * in_cols + b * stride + offset + c] +=
                        g[static_cast<size_t>(r) * out_cols + b * count + c];
    };
    return nodes_[id].value;
}

std::unordered_map<int, Tensor> Tape::backward(const Tensor& loss) {
    if (consumed_) throw TapeError("tape already consumed by a previous backward pass");
    if (loss.node() < 0 || loss.node() >= static_cast<int>(nodes_.size()))
        throw TapeError("loss tensor is not on this tape");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw TapeError("backward requires a scalar (1x1) loss");
    consumed_ = true;
    grads_.assign(nodes_.size(), {});
    grad_buf(loss.node())[0] = 1.0;
    for (int i = loss.node(); i >= 0; --i) {
        if (grads_[i].empty()) continue;
        if (nodes_[i].pull) nodes_[i].pull(*this);
    }
    result_.clear();
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (!nodes_[i].is_param || grads_[i].empty()) continue;
        Tensor g(nodes_[i].value.rows(), nodes_[i].value.cols());
        g.values() = grads_[i];
        result_.emplace(i, std::move(g));
    }
    return result_;
}

const Tensor* Tape::gradient(const Tensor& leaf) const {
    auto it = result_.find(leaf.node());
    return it == result_.end() ? nullptr : &it->second;
}

}  // namespace daggnn
