#ifndef DAGGNN_TESTS_FD_CHECK_HPP
#define DAGGNN_TESTS_FD_CHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "daggnn/tensor.hpp"

// Central finite differences over a flat parameter vector. Independent of the
// tape machinery: callers provide a plain double-valued evaluation.
namespace fd {

using ScalarFn = std::function<double(const std::vector<double>&)>;

inline std::vector<double> central_diff(const ScalarFn& f, std::vector<double> x,
                                        double step = 1e-5) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + step;
        const double fp = f(x);
        x[i] = x0 - step;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

inline double max_rel_error(const std::vector<double>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        const double denom = std::fabs(want[i]) + 1e-8;
        worst = std::max(worst, std::fabs(got[i] - want[i]) / denom);
    }
    return worst;
}

// Checks d(sum of scalar fn built on tape)/d(param) against central differences.
// build: given a tape and the parameter leaf, return the scalar loss tensor.
inline double check_gradient(const daggnn::Tensor& param,
                             const std::function<daggnn::Tensor(daggnn::Tape&, const daggnn::Tensor&)>& build,
                             double step = 1e-5) {
    daggnn::Tape tape;
    daggnn::Tensor leaf = tape.parameter(param);
    daggnn::Tensor loss = build(tape, leaf);
    auto grads = tape.backward(loss);
    const auto& got = grads.at(leaf.node()).values();

    const int r = param.rows(), c = param.cols();
    ScalarFn f = [&](const std::vector<double>& x) {
        daggnn::Tensor p(r, c);
        p.values() = x;
        daggnn::Tape t;
        daggnn::Tensor l = t.parameter(p);
        return build(t, l)(0, 0);
    };
    std::vector<double> want = central_diff(f, param.values(), step);
    return max_rel_error(got, want);
}

}  // namespace fd

#endif
