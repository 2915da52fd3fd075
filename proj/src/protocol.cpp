// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/protocol.hpp"

#include "mvrecon/error.hpp"

#include <cmath>

namespace mvr {

void NoiseDistribution::validate() const {
    if (!std::isfinite(p_mean) || !std::isfinite(p_std) || p_std < 0.0)
        throw InputError("noise distribution: p_mean must be finite and p_std finite and >= 0");
}

double sample_sigma(const NoiseDistribution& dist, std::mt19937_64& rng) {
    dist.validate();
    if (dist.p_std == 0.0)
        return std::exp(dist.p_mean);
    std::normal_distribution<double> normal(dist.p_mean, dist.p_std);
    return std::exp(normal(rng));
}

ConditionDropout sample_dropout(double p, std::mt19937_64& rng) {
    if (!(p >= 0.0 && p <= 1.0))
        throw InputError("dropout probability must lie in [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool latent = unit(rng) < p;
    const bool embedding = unit(rng) < p;
    return {latent, embedding};
}

} // namespace mvr
