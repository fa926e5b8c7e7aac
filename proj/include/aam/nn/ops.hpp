#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "aam/nn/matrix.hpp"
#include "aam/nn/store.hpp"
#include "aam/nn/tape.hpp"

namespace aam::nn {

// Max-subtracted softmax over a vector. -inf logits map to exactly 0;
// all--inf input is rejected.
inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : logits) mx = std::max(mx, x);
    if (!std::isfinite(mx)) throw std::invalid_argument("softmax: no finite logit");
    std::vector<double> out(logits.size());
    std::vector<double> terms;
    terms.reserve(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::isfinite(logits[i]) ? std::exp(logits[i] - mx) : 0.0;
        terms.push_back(out[i]);
    }
    double z = stable_sum(terms);
    for (double& x : out) x /= z;
    return out;
}

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

// Standard Adam over a fixed parameter list. Deterministic given call order.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Parameter*> params, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(double lr) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (Parameter* p : params_) {
            for (size_t i = 0; i < p->value.d.size(); ++i) {
                double g = p->grad.d[i];
                p->m.d[i] = beta1_ * p->m.d[i] + (1.0 - beta1_) * g;
                p->v.d[i] = beta2_ * p->v.d[i] + (1.0 - beta2_) * g * g;
                double mhat = p->m.d[i] / bc1;
                double vhat = p->v.d[i] / bc2;
                p->value.d[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void zero_grads() {
        for (Parameter* p : params_) p->zero_grad();
    }

private:
    std::vector<Parameter*> params_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

// Central finite differences against the analytic gradient of a scalar
// function of the given parameters. Returns the max relative error
// |g_a - g_fd| / max(1, |g_a| + |g_fd|).
inline double grad_check(const std::function<double()>& f, std::vector<Parameter*> params,
                         double epsilon = 1e-5) {
    for (Parameter* p : params) p->zero_grad();
    f();  // must run a tape forward+backward internally, filling p->grad
    double worst = 0.0;
    for (Parameter* p : params) {
        for (size_t i = 0; i < p->value.d.size(); ++i) {
            double saved = p->value.d[i];
            p->value.d[i] = saved + epsilon;
            std::vector<Matrix> saved_grads;
            for (Parameter* q : params) saved_grads.push_back(q->grad);
            double fp = f();
            p->value.d[i] = saved - epsilon;
            double fm = f();
            p->value.d[i] = saved;
            for (size_t qi = 0; qi < params.size(); ++qi) params[qi]->grad = saved_grads[qi];
            double fd = (fp - fm) / (2.0 * epsilon);
            double ga = p->grad.d[i];
            double err = std::abs(ga - fd) / std::max(1.0, std::abs(ga) + std::abs(fd));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace aam::nn
