#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wheelrel/gmm.hpp"
#include "wheelrel/rng.hpp"

using namespace wheelrel;

namespace {

double mixture_pdf(const GaussianMixture& m, double x) {
    double p = 0.0;
    for (const auto& c : m.components) {
        double z = (x - c.mean) / c.stddev;
        p += c.weight * std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * M_PI));
    }
    return p;
}

std::vector<double> two_bump_samples(std::size_t n, std::uint64_t seed) {
    // 0.5*N(-1.0, 0.2^2) + 0.5*N(0.8, 0.3^2)
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.5)
            out.push_back(rng.normal(-1.0, 0.2));
        else
            out.push_back(rng.normal(0.8, 0.3));
    }
    return out;
}

} // namespace

TEST_CASE("identical samples collapse onto the sigma floor", "[gmm]") {
    std::vector<double> samples(25, 0.7);
    GaussianMixture m = fit_gmm(samples, 1, 3, PairKind::WheelVehicle);
    REQUIRE(m.components.size() == 1);
    CHECK(m.components[0].mean == Catch::Approx(0.7).margin(1e-12));
    CHECK(m.components[0].stddev == Catch::Approx(kSigmaFloor).margin(1e-15));
    CHECK(m.components[0].weight == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("single-component fit equals the closed form", "[gmm]") {
    Rng rng(99);
    std::vector<double> samples;
    for (int i = 0; i < 500; ++i) samples.push_back(rng.normal(0.3, 0.8));
    double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= samples.size(); // EM converges to the population variance
    GaussianMixture m = fit_gmm(samples, 1, 7, PairKind::WheelWheel);
    REQUIRE(m.components.size() == 1);
    CHECK(m.components[0].mean == Catch::Approx(mean).margin(1e-9));
    CHECK(m.components[0].stddev ==
          Catch::Approx(std::max(std::sqrt(var), kSigmaFloor)).margin(1e-9));
}

TEST_CASE("two-component recovery on a known mixture", "[gmm]") {
    std::vector<double> samples = two_bump_samples(4000, 20240101);
    GaussianMixture m = fit_gmm(samples, 2, 5, PairKind::WheelVehicle);
    REQUIRE(m.components.size() == 2);
    // components come back sorted by mean
    CHECK(m.components[0].mean == Catch::Approx(-1.0).margin(0.05));
    CHECK(m.components[1].mean == Catch::Approx(0.8).margin(0.05));
    CHECK(m.components[0].weight == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("EM log-likelihood never decreases", "[gmm]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<double> samples = two_bump_samples(600, 1000 + seed);
        GmmFitDiagnostics diag;
        fit_gmm(samples, 3, seed, PairKind::WheelVehicle, &diag);
        REQUIRE(diag.iterations >= 1);
        for (std::size_t i = 1; i < diag.avg_loglik_history.size(); ++i)
            REQUIRE(diag.avg_loglik_history[i] - diag.avg_loglik_history[i - 1] >= -1e-9);
        REQUIRE(diag.final_avg_loglik == diag.avg_loglik_history.back());
    }
}

TEST_CASE("fitted mixtures satisfy their invariants", "[gmm]") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        std::vector<double> samples = two_bump_samples(500, 77 + seed);
        for (std::size_t k = 1; k <= 4; ++k) {
            GaussianMixture m = fit_gmm(samples, k, seed, PairKind::WheelWheel);
            REQUIRE(m.components.size() == k);
            double wsum = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                REQUIRE(m.components[i].weight > 0.0);
                REQUIRE(m.components[i].stddev >= kSigmaFloor);
                if (i) REQUIRE(m.components[i].mean >= m.components[i - 1].mean);
                wsum += m.components[i].weight;
            }
            REQUIRE(wsum == Catch::Approx(1.0).margin(1e-9));
        }
    }
}

TEST_CASE("mixture density integrates to one", "[gmm]") {
    std::vector<double> samples = two_bump_samples(1500, 31);
    GaussianMixture m = fit_gmm(samples, 2, 9, PairKind::WheelVehicle);
    double lo = m.components.front().mean, hi = m.components.back().mean, smax = 0.0;
    for (const auto& c : m.components) {
        lo = std::min(lo, c.mean);
        hi = std::max(hi, c.mean);
        smax = std::max(smax, c.stddev);
    }
    lo -= 8 * smax;
    hi += 8 * smax;
    // Simpson's rule
    const int n = 4000;
    double hstep = (hi - lo) / n, integral = mixture_pdf(m, lo) + mixture_pdf(m, hi);
    for (int i = 1; i < n; ++i)
        integral += mixture_pdf(m, lo + i * hstep) * (i % 2 ? 4.0 : 2.0);
    integral *= hstep / 3.0;
    CHECK(integral == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("degenerate inputs are rejected", "[gmm]") {
    std::vector<double> few(15, 1.0);
    CHECK_THROWS_AS(fit_gmm(few, 2, 1, PairKind::WheelVehicle), ValidationError); // needs 20
    CHECK_THROWS_AS(fit_gmm(few, 0, 1, PairKind::WheelVehicle), ValidationError);
    std::vector<double> bad(30, 0.5);
    bad[7] = std::nan("");
    CHECK_THROWS_AS(fit_gmm(bad, 1, 1, PairKind::WheelVehicle), ValidationError);
}

TEST_CASE("sigma clamps are reported", "[gmm]") {
    std::vector<double> samples(40, 2.5); // zero spread forces the floor
    GmmFitDiagnostics diag;
    fit_gmm(samples, 1, 1, PairKind::WheelVehicle, &diag);
    CHECK(diag.sigma_clamps > 0);
}

TEST_CASE("same seed, same fit", "[gmm]") {
    std::vector<double> samples = two_bump_samples(800, 5);
    GaussianMixture a = fit_gmm(samples, 2, 42, PairKind::WheelVehicle);
    GaussianMixture b = fit_gmm(samples, 2, 42, PairKind::WheelVehicle);
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        CHECK(a.components[i].weight == b.components[i].weight);
        CHECK(a.components[i].mean == b.components[i].mean);
        CHECK(a.components[i].stddev == b.components[i].stddev);
    }
}
