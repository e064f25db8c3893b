#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/rng.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

// Dense row-major tensor of doubles. Small and dumb on purpose: the models
// here are tiny, clarity wins over BLAS.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)),
          data(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<>()),
               fill) {}

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s), 0.0); }
    static Tensor full(std::vector<std::size_t> s, double v) { return Tensor(std::move(s), v); }

    std::size_t numel() const { return data.size(); }

    std::size_t dim(std::size_t i) const { return shape.at(i); }

    template <typename... Ix>
    double& operator()(Ix... ix) {
        return data[offset({static_cast<std::size_t>(ix)...})];
    }
    template <typename... Ix>
    double operator()(Ix... ix) const {
        return data[offset({static_cast<std::size_t>(ix)...})];
    }

    std::size_t offset(std::initializer_list<std::size_t> ix) const {
        std::size_t off = 0;
        std::size_t d = 0;
        for (std::size_t i : ix) {
            off = off * shape[d] + i;
            ++d;
        }
        return off;
    }
};

inline void ensure_finite(const Tensor& t, const std::string& context) {
    for (double v : t.data)
        if (!std::isfinite(v)) throw NumericError(context + ": non-finite value");
}

inline void ensure_finite(double v, const std::string& context) {
    if (!std::isfinite(v)) throw NumericError(context + ": non-finite value");
}

// A learnable tensor plus its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape);
    }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Glorot/fan-balanced uniform init: U(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                             std::size_t fan_out, Rng& rng) {
    Tensor t(std::move(shape));
    double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.data) v = rng.uniform(-s, s);
    return t;
}

// ---- fully connected: out[n,O] = x[n,I] * W[I,O] + b[O] ----

inline Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(1);
    if (w.dim(0) != in || b.dim(0) != out) throw ValidationError("fc: shape mismatch");
    Tensor y({n, out});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b.data[o];
            for (std::size_t i = 0; i < in; ++i)
                acc += x.data[r * in + i] * w.data[i * out + o];
            y.data[r * out + o] = acc;
        }
    ensure_finite(y, "fc");
    return y;
}

inline void fc_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx,
                        Tensor& gw, Tensor& gb) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) {
            double g = gy.data[r * out + o];
            gb.data[o] += g;
            for (std::size_t i = 0; i < in; ++i) {
                gw.data[i * out + o] += x.data[r * in + i] * g;
                gx.data[r * in + i] += w.data[i * out + o] * g;
            }
        }
}

// ---- conv2d: valid cross-correlation, stride, no bias ----
// x [B,C,H,W], kernel [O,C,k,k] -> y [B,O,Hout,Wout]

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride) {
    if (in < k) throw ValidationError("conv2d: input smaller than kernel");
    return (in - k) / stride + 1;
}

inline Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t o = kernel.dim(0), k = kernel.dim(2);
    if (kernel.dim(1) != c || kernel.dim(3) != k) throw ValidationError("conv2d: shape mismatch");
    const std::size_t ho = conv_out_extent(h, k, stride);
    const std::size_t wo = conv_out_extent(w, k, stride);
    Tensor y({n, o, ho, wo});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < o; ++oc)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    double acc = 0.0;
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx)
                                acc += x(b, ic, oy * stride + ky, ox * stride + kx) *
                                       kernel(oc, ic, ky, kx);
                    y(b, oc, oy, ox) = acc;
                }
    ensure_finite(y, "conv2d");
    return y;
}

inline void conv2d_backward(const Tensor& x, const Tensor& kernel, std::size_t stride,
                            const Tensor& gy, Tensor& gx, Tensor& gkernel) {
    const std::size_t n = x.dim(0), c = x.dim(1);
    const std::size_t o = kernel.dim(0), k = kernel.dim(2);
    const std::size_t ho = gy.dim(2), wo = gy.dim(3);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < o; ++oc)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    double g = gy(b, oc, oy, ox);
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                gkernel(oc, ic, ky, kx) +=
                                    x(b, ic, oy * stride + ky, ox * stride + kx) * g;
                                gx(b, ic, oy * stride + ky, ox * stride + kx) +=
                                    kernel(oc, ic, ky, kx) * g;
                            }
                }
}

// ---- relu ----

inline Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = std::max(v, 0.0);
    return y;
}

inline void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    for (std::size_t i = 0; i < x.data.size(); ++i)
        gx.data[i] += x.data[i] > 0.0 ? gy.data[i] : 0.0;
}

// ---- softmax over a flat vector (max-subtracted for stability) ----

inline std::vector<double> softmax_vec(const std::vector<double>& z) {
    if (z.empty()) return {};
    double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

// d(loss)/d(z_i) = p_i * (g_i - sum_j g_j p_j)
inline std::vector<double> softmax_vec_backward(const std::vector<double>& p,
                                                const std::vector<double>& gp) {
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += gp[i] * p[i];
    std::vector<double> gz(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] = p[i] * (gp[i] - dot);
    return gz;
}

// ---- concat two row vectors [1,A] + [1,B] -> [1,A+B] ----

inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.dim(0) != b.dim(0)) throw ValidationError("concat_rows: row count mismatch");
    const std::size_t n = a.dim(0), da = a.dim(1), db = b.dim(1);
    Tensor y({n, da + db});
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(a.data.begin() + r * da, da, y.data.begin() + r * (da + db));
        std::copy_n(b.data.begin() + r * db, db, y.data.begin() + r * (da + db) + da);
    }
    return y;
}

// ---- row-wise L2 normalization with a zero-norm guard ----

constexpr double kNormFloor = 1e-12;

inline Tensor l2_normalize_rows(const Tensor& x) {
    const std::size_t n = x.dim(0), d = x.dim(1);
    Tensor y({n, d});
    for (std::size_t r = 0; r < n; ++r) {
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) sq += x.data[r * d + i] * x.data[r * d + i];
        double norm = std::max(std::sqrt(sq), kNormFloor);
        for (std::size_t i = 0; i < d; ++i) y.data[r * d + i] = x.data[r * d + i] / norm;
    }
    return y;
}

inline void l2_normalize_rows_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    const std::size_t n = x.dim(0), d = x.dim(1);
    for (std::size_t r = 0; r < n; ++r) {
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) sq += x.data[r * d + i] * x.data[r * d + i];
        double norm = std::max(std::sqrt(sq), kNormFloor);
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += gy.data[r * d + i] * x.data[r * d + i];
        for (std::size_t i = 0; i < d; ++i) {
            double g = gy.data[r * d + i] / norm;
            if (norm > kNormFloor) g -= x.data[r * d + i] * dot / (norm * norm * norm);
            gx.data[r * d + i] += g;
        }
    }
}

// ---- numeric gradient verification ----

struct GradCheckTarget {
    std::vector<Parameter*> params;
    std::function<double()> forward;       // loss at current parameter values
    std::function<void()> accumulate_grad; // forward + backward into param grads
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// Central differences against the analytic gradient. Error per element is
// |g_ad - g_fd| / max(1e-6, |g_ad| + |g_fd|); the floor keeps cancellation
// noise on near-zero gradients from dominating the ratio. The max over all
// elements is returned.
inline GradCheckResult grad_check(GradCheckTarget& target, double epsilon = 1e-5) {
    for (Parameter* p : target.params) p->zero_grad();
    target.accumulate_grad();
    GradCheckResult res;
    for (Parameter* p : target.params) {
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            double saved = p->value.data[i];
            p->value.data[i] = saved + epsilon;
            double up = target.forward();
            p->value.data[i] = saved - epsilon;
            double down = target.forward();
            p->value.data[i] = saved;
            double fd = (up - down) / (2.0 * epsilon);
            double ad = p->grad.data[i];
            double err = std::abs(ad - fd) / std::max(1e-6, std::abs(ad) + std::abs(fd));
            if (err > res.max_rel_error) {
                res.max_rel_error = err;
                res.worst_param = p->name;
                res.worst_index = i;
            }
        }
    }
    return res;
}

// ---- named-tensor checkpoints ----

inline nlohmann::ordered_json tensor_to_json(const Tensor& t) {
    return nlohmann::ordered_json{{"shape", t.shape}, {"data", t.data}};
}

inline Tensor tensor_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("shape") || !j.contains("data"))
        throw ValidationError(where + ": expected {shape, data}");
    Tensor t;
    t.shape = j["shape"].get<std::vector<std::size_t>>();
    t.data = j["data"].get<std::vector<double>>();
    std::size_t expect = std::accumulate(t.shape.begin(), t.shape.end(), std::size_t{1},
                                         std::multiplies<>());
    if (t.data.size() != expect)
        throw ValidationError(where + ": data length does not match shape");
    return t;
}

} // namespace wheelrel
