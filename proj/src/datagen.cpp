#include "daggnn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "daggnn/acyclicity.hpp"

namespace daggnn {

std::string format_double(double v) {
    char buf[32];
    // shortest representation that round-trips a double
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    return buf;
}

GroundTruthDag random_dag(int m, double expected_degree, uint64_t seed, WeightRange weights) {
    if (m < 2) throw DomainError("random_dag requires m >= 2");
    const double p = expected_degree / static_cast<double>(m - 1);
    if (p <= 0.0 || p >= 1.0)
        throw DomainError("edge probability degree/(m-1) = " + std::to_string(p) +
                          " must lie in (0,1)");
    Rng rng(seed);
    GroundTruthDag dag{m, Tensor(m, m), std::vector<int>(m)};
    std::iota(dag.order.begin(), dag.order.end(), 0);
    std::shuffle(dag.order.begin(), dag.order.end(), rng);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> mag(weights.lo, weights.hi);
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            if (coin(rng) >= p) continue;
            const double w = (coin(rng) < 0.5 ? -1.0 : 1.0) * mag(rng);
            dag.adjacency(dag.order[a], dag.order[b]) = w;
        }
    return dag;
}

namespace {

void require_acyclic(const GroundTruthDag& dag) {
    if (!is_acyclic_oracle(dag.adjacency))
        throw DomainError("input adjacency matrix contains a cycle");
}

}  // namespace

Dataset sample_linear(const GroundTruthDag& dag, int n, int d, uint64_t seed) {
    require_acyclic(dag);
    const int m = dag.m;
    Tensor system(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) system(i, j) = (i == j ? 1.0 : 0.0) - dag.adjacency(j, i);
    LuFactors lu = lu_factor(system);
    Rng rng(seed);
    Dataset ds;
    ds.kind = DatasetKind::continuous;
    ds.truth = dag;
    ds.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        Tensor z = normal_matrix(m, d, rng);
        ds.samples.push_back(lu_solve(lu, z));
    }
    return ds;
}

Dataset sample_nonlinear_pre(const GroundTruthDag& dag, int n, uint64_t seed) {
    require_acyclic(dag);
    const int m = dag.m;
    Rng rng(seed);
    Dataset ds;
    ds.kind = DatasetKind::continuous;
    ds.truth = dag;
    ds.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        Tensor z = normal_matrix(m, 1, rng);
        Tensor x(m, 1);
        for (int pos = 0; pos < m; ++pos) {
            const int j = dag.order[pos];
            double s = 0.0;
            for (int i = 0; i < m; ++i)
                if (dag.adjacency(i, j) != 0.0) s += dag.adjacency(i, j) * std::cos(x(i, 0) + 1.0);
            x(j, 0) = s + z(j, 0);
        }
        ds.samples.push_back(std::move(x));
    }
    return ds;
}

Dataset sample_nonlinear_post(const GroundTruthDag& dag, int n, uint64_t seed) {
    require_acyclic(dag);
    const int m = dag.m;
    Rng rng(seed);
    Dataset ds;
    ds.kind = DatasetKind::continuous;
    ds.truth = dag;
    ds.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        Tensor z = normal_matrix(m, 1, rng);
        Tensor x(m, 1);
        for (int pos = 0; pos < m; ++pos) {
            const int j = dag.order[pos];
            double s = 0.0;
            for (int i = 0; i < m; ++i)
                if (dag.adjacency(i, j) != 0.0) s += dag.adjacency(i, j) * (x(i, 0) + 0.5);
            x(j, 0) = 2.0 * std::sin(s) + s + z(j, 0);
        }
        ds.samples.push_back(std::move(x));
    }
    return ds;
}

Tensor vector_valued_columns(const Tensor& xtilde, const std::vector<double>& u,
                             const std::vector<double>& v, const Tensor& noise) {
    const int m = xtilde.rows();
    const int d = static_cast<int>(u.size());
    if (noise.rows() != m || noise.cols() != d || v.size() != u.size())
        throw ShapeError("vector_valued_columns shape mismatch");
    Tensor x(m, d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < m; ++i) x(i, k) = u[k] * xtilde(i, 0) + v[k] + noise(i, k);
    return x;
}

Dataset sample_vector_valued(const GroundTruthDag& dag, int n, int d, uint64_t seed) {
    if (d < 2) throw DomainError("vector-valued generation requires d >= 2");
    require_acyclic(dag);
    const int m = dag.m;
    Tensor system(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) system(i, j) = (i == j ? 1.0 : 0.0) - dag.adjacency(j, i);
    LuFactors lu = lu_factor(system);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // one scale/offset pair per dimension, shared by the whole dataset, so the
    // de-noised columns stay rank one across samples
    std::vector<double> u(d), v(d);
    for (int c = 0; c < d; ++c) u[c] = normal(rng);
    for (int c = 0; c < d; ++c) v[c] = normal(rng);
    Dataset ds;
    ds.kind = DatasetKind::continuous;
    ds.truth = dag;
    ds.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        Tensor xtilde = lu_solve(lu, normal_matrix(m, 1, rng));
        Tensor noise = normal_matrix(m, d, rng);
        ds.samples.push_back(vector_valued_columns(xtilde, u, v, noise));
    }
    return ds;
}

Tensor nonlinear_pre_effective_truth(const GroundTruthDag& dag) {
    Tensor t = dag.adjacency.clone();
    const double scale = -std::sin(1.0);
    for (double& v : t.values()) v *= scale;
    return t;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << "# m=" << ds.m() << " d=" << ds.d() << " kind="
        << (ds.kind == DatasetKind::continuous ? "continuous" : "discrete") << "\n";
    for (const Tensor& x : ds.samples) {
        bool first = true;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) {
                if (!first) out << ',';
                out << format_double(x(i, j));
                first = false;
            }
        out << "\n";
    }
    if (!out) throw ParseError("write failure on " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path + ": missing header line");
    int m = 0, d = 0;
    char kind_buf[32] = {0};
    if (std::sscanf(header.c_str(), "# m=%d d=%d kind=%31s", &m, &d, kind_buf) != 3)
        throw ParseError(path + ":1: malformed header, expected '# m=<m> d=<d> kind=<kind>'");
    if (m <= 0 || d <= 0) throw ParseError(path + ":1: m and d must be positive");
    const std::string kind_str(kind_buf);
    Dataset ds;
    if (kind_str == "continuous")
        ds.kind = DatasetKind::continuous;
    else if (kind_str == "discrete")
        ds.kind = DatasetKind::one_hot_discrete;
    else
        throw ParseError(path + ":1: unknown kind '" + kind_str + "'");

    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Tensor x(m, d);
        size_t pos = 0;
        for (int idx = 0; idx < m * d; ++idx) {
            if (pos >= line.size())
                throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(m * d) + " values, found " + std::to_string(idx));
            size_t comma = line.find(',', pos);
            const std::string tok = line.substr(pos, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - pos);
            try {
                size_t used = 0;
                x.values()[idx] = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": column " +
                                 std::to_string(idx + 1) + ": bad number '" + tok + "'");
            }
            pos = comma == std::string::npos ? line.size() : comma + 1;
        }
        if (pos < line.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(m * d) + " values, found extra data");
        if (ds.kind == DatasetKind::one_hot_discrete) {
            for (int i = 0; i < m; ++i) {
                int ones = 0;
                for (int j = 0; j < d; ++j) {
                    const double v = x(i, j);
                    if (v == 1.0)
                        ++ones;
                    else if (v != 0.0)
                        throw ParseError(path + ":" + std::to_string(lineno) + ": variable " +
                                         std::to_string(i + 1) + " is not one-hot");
                }
                if (ones != 1)
                    throw ParseError(path + ":" + std::to_string(lineno) + ": variable " +
                                     std::to_string(i + 1) + " is not one-hot");
            }
        }
        ds.samples.push_back(std::move(x));
    }
    if (ds.samples.empty()) throw ParseError(path + ": no samples");
    return ds;
}

void save_adjacency(const Tensor& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << format_double(a(i, j));
        }
        out << "\n";
    }
    if (!out) throw ParseError("write failure on " + path);
}

Tensor load_adjacency(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + tok +
                                 "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty adjacency file");
    const int m = static_cast<int>(rows.size());
    Tensor a(m, m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != m)
            throw ParseError(path + ":" + std::to_string(i + 1) + ": expected " +
                             std::to_string(m) + " columns, found " +
                             std::to_string(rows[i].size()));
        for (int j = 0; j < m; ++j) a(i, j) = rows[i][j];
    }
    return a;
}

}  // namespace daggnn
