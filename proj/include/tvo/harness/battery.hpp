#pragma once

// Seeded random model and schedule generators shared by verify and the tests.

#include "tvo/path_models.hpp"
#include "tvo/schedules.hpp"

#include <random>

namespace tvo::harness {

// M in [2, max_states]; q from normalized log-normal masses, joint masses log-normal.
DiscreteLatentModel random_discrete_model(std::mt19937_64& rng, std::size_t max_states = 16);

// K in [1, max_intervals] with uniformly drawn interior points.
Schedule random_schedule(std::mt19937_64& rng, std::size_t max_intervals = 16);

// Well-conditioned linear-Gaussian model paired with a datapoint.
GaussianDatum random_gaussian_datum(std::mt19937_64& rng, Eigen::Index latent_dim,
                                    Eigen::Index obs_dim);

// One-dimensional latent and observation.
GaussianDatum random_scalar_datum(std::mt19937_64& rng);

// q has the posterior covariance but a shifted mean: eta is linear in beta.
GaussianDatum mean_mismatch_datum(double shift = 1.5);

// q(z) proportional to p(x, z): a flat integrand.
DiscreteLatentModel flat_discrete_model(std::size_t states = 4);
GaussianDatum flat_gaussian_datum();

}  // namespace tvo::harness
