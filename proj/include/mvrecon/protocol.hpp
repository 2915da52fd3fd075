// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Sampling utilities for the diffusion training protocol: log-normal noise levels
// and independent condition dropout for classifier-free guidance.
#pragma once

#include <random>

namespace mvr {

/// ln(sigma) ~ Normal(p_mean, p_std^2).
struct NoiseDistribution {
    double p_mean = 1.5;
    double p_std = 2.0;
    void validate() const;
};

/// The noise distribution of the base video model, used for comparison.
inline constexpr NoiseDistribution kPretrainNoise{0.7, 1.6};

double sample_sigma(const NoiseDistribution& dist, std::mt19937_64& rng);

struct ConditionDropout {
    bool drop_latent = false;
    bool drop_embedding = false;
};

/// Two independent Bernoulli(p) draws. Throws InputError for p outside [0,1].
ConditionDropout sample_dropout(double p, std::mt19937_64& rng);

} // namespace mvr
