#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wheelrel/rng.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

enum class PairKind { WheelVehicle, WheelWheel };

inline const char* pair_kind_name(PairKind k) {
    return k == PairKind::WheelVehicle ? "wv" : "ww";
}

constexpr double kSigmaFloor = 1e-3;

struct GaussianComponent {
    double weight = 1.0;
    double mean = 0.0;
    double stddev = 1.0;
};

// 1-D mixture over the log distance-ratio axis.
struct GaussianMixture {
    std::vector<GaussianComponent> components;
    PairKind kind = PairKind::WheelVehicle;

    double pdf(double x) const {
        constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599344;
        double p = 0.0;
        for (const auto& c : components) {
            double z = (x - c.mean) / c.stddev;
            p += c.weight * inv_sqrt_2pi / c.stddev * std::exp(-0.5 * z * z);
        }
        return p;
    }
};

struct GmmFitDiagnostics {
    std::size_t iterations = 0;
    double final_avg_loglik = -std::numeric_limits<double>::infinity();
    std::vector<double> avg_loglik_history; // one entry per E step
    std::size_t sigma_clamps = 0;           // components hitting the floor, summed over iterations
};

namespace detail {

inline double log_gauss(double x, double mean, double stddev) {
    constexpr double log_sqrt_2pi = 0.91893853320467274178032973640562;
    double z = (x - mean) / stddev;
    return -0.5 * z * z - std::log(stddev) - log_sqrt_2pi;
}

} // namespace detail

// Expectation-maximization fit with k-quantile mean initialization, global
// stddev, uniform weights. Stops when the average log-likelihood improves by
// less than 1e-7 or after 500 iterations. The seed only matters when quantile
// means collide (duplicate-heavy samples): colliding means are spread apart
// with a small seeded jitter so EM can separate them.
inline GaussianMixture fit_gmm(const std::vector<double>& samples, std::size_t k,
                               std::uint64_t seed, PairKind kind,
                               GmmFitDiagnostics* diag = nullptr) {
    if (k < 1) throw ValidationError("fit_gmm: component count must be at least 1");
    if (samples.size() < 10 * k)
        throw ValidationError("fit_gmm: need at least " + std::to_string(10 * k) +
                              " samples for k=" + std::to_string(k) + ", got " +
                              std::to_string(samples.size()));
    for (double x : samples)
        if (!std::isfinite(x)) throw ValidationError("fit_gmm: non-finite sample");

    const std::size_t n = samples.size();
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());

    double mean_all = 0.0;
    for (double x : sorted) mean_all += x;
    mean_all /= static_cast<double>(n);
    double var_all = 0.0;
    for (double x : sorted) var_all += (x - mean_all) * (x - mean_all);
    var_all /= static_cast<double>(n);
    double sd_all = std::max(std::sqrt(var_all), kSigmaFloor);

    GaussianMixture mix;
    mix.kind = kind;
    mix.components.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        double q = (static_cast<double>(c) + 0.5) / static_cast<double>(k);
        std::size_t idx = std::min(n - 1, static_cast<std::size_t>(q * static_cast<double>(n)));
        mix.components[c] = {1.0 / static_cast<double>(k), sorted[idx], sd_all};
    }
    bool collided = false;
    for (std::size_t c = 1; c < k; ++c)
        if (!(mix.components[c].mean > mix.components[c - 1].mean)) collided = true;
    if (collided) {
        Rng rng(seed);
        for (std::size_t c = 0; c < k; ++c)
            mix.components[c].mean +=
                static_cast<double>(c) * kSigmaFloor + rng.uniform(0.0, 0.1 * kSigmaFloor);
    }

    GmmFitDiagnostics local;
    GmmFitDiagnostics& d = diag ? *diag : local;
    d = GmmFitDiagnostics{};

    std::vector<double> resp(n * k);
    std::vector<double> logp(k);
    double prev_avg_ll = -std::numeric_limits<double>::infinity();
    constexpr std::size_t max_iters = 500;
    constexpr double ll_tol = 1e-7;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // E step
        double sum_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_lp = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                logp[c] = std::log(mix.components[c].weight) +
                          detail::log_gauss(sorted[i], mix.components[c].mean,
                                            mix.components[c].stddev);
                max_lp = std::max(max_lp, logp[c]);
            }
            double sum_exp = 0.0;
            for (std::size_t c = 0; c < k; ++c) sum_exp += std::exp(logp[c] - max_lp);
            double lse = max_lp + std::log(sum_exp);
            sum_ll += lse;
            for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(logp[c] - lse);
        }
        double avg_ll = sum_ll / static_cast<double>(n);
        d.avg_loglik_history.push_back(avg_ll);
        d.iterations = iter + 1;
        d.final_avg_loglik = avg_ll;
        if (avg_ll - prev_avg_ll < ll_tol && iter > 0) break;
        prev_avg_ll = avg_ll;

        // M step; stddevs never drop below the floor
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0, sum_x = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + c];
                sum_x += resp[i * k + c] * sorted[i];
            }
            auto& comp = mix.components[c];
            if (nk > 1e-12) {
                comp.mean = sum_x / nk;
                double sum_sq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double dx = sorted[i] - comp.mean;
                    sum_sq += resp[i * k + c] * dx * dx;
                }
                double sd = std::sqrt(sum_sq / nk);
                if (sd < kSigmaFloor) {
                    sd = kSigmaFloor;
                    ++d.sigma_clamps;
                }
                comp.stddev = sd;
                comp.weight = nk / static_cast<double>(n);
            } else {
                comp.weight = 1e-12; // starved component; keep its parameters
            }
        }
        double wsum = 0.0;
        for (auto& comp : mix.components) wsum += comp.weight;
        for (auto& comp : mix.components) comp.weight /= wsum;
    }

    std::sort(mix.components.begin(), mix.components.end(),
              [](const GaussianComponent& a, const GaussianComponent& b) {
                  return a.mean < b.mean;
              });
    return mix;
}

} // namespace wheelrel
