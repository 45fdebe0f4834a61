#include <doctest.h>

#include <random>

#include "chaomask/kernels.hpp"
#include "chaomask/synthesis.hpp"
#include "oracles.hpp"

using namespace chaomask;

TEST_CASE("parallel frequency sweep equals the serial reference")
{
    std::mt19937_64 rng(4);
    const Matrix a = oracle::random_matrix(rng, 7, 7);
    const Matrix c = oracle::random_matrix(rng, 2, 7);
    std::vector<double> w(1500);
    for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = 0.013 * static_cast<double>(k);
    CHECK(kernels::sigma_min_profile(a, c, w) == kernels::sigma_min_profile_serial(a, c, w));
}

TEST_CASE("parallel jacobian sup equals the serial reference")
{
    ChaoticMask m = rossler_p4(0.5, 0.5);
    const Vector sigma = (Vector(3) << 9.0, 8.5, 20.0).finished();
    CHECK(kernels::max_jacobian_norm(m.phi, sigma, 21) == kernels::max_jacobian_norm_serial(m.phi, sigma, 21));

    PolynomialMap p(3, 3);
    p.add_term(0, 0.7, {1, 1, 0});
    p.add_term(1, -0.2, {0, 2, 1});
    p.add_term(2, 1.1, {3, 0, 0});
    CHECK(kernels::max_jacobian_norm(p, sigma, 15) == kernels::max_jacobian_norm_serial(p, sigma, 15));
}

TEST_CASE("distance and synthesis are independent of the execution policy")
{
    ChaoticMask m = scale_mask(rossler_p4(0.5, 0.5), 100.0);
    m.Lambda = oracle::b747_Lambda();
    m = populate_mask(m, oracle::rossler_xi0());
    const ExtendedSystem e =
        build_extended(LtiPlant(oracle::b747_A(), oracle::b747_B(), oracle::b747_C()), m);

    const auto dp = distance_to_unobservability(e.A, e.C, std::nullopt, kDefaultFrequencyGrid, Execution::Parallel);
    const auto ds = distance_to_unobservability(e.A, e.C, std::nullopt, kDefaultFrequencyGrid, Execution::Serial);
    CHECK(dp.delta == ds.delta);
    CHECK(dp.w_star == ds.w_star);

    const ObserverGain gp = synthesize_gain(e, Execution::Parallel);
    const ObserverGain gs = synthesize_gain(e, Execution::Serial);
    CHECK(gp.L == gs.L);
    CHECK(gp.margin == gs.margin);
}
