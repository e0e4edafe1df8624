#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ssrecon/rng.hpp"

namespace ssrecon {

/// Linear subspace signal model: x = U c with c ~ N(0, I/d), measured as
/// y = x + z, z ~ N(0, sigma_z^2/n I), and a second measurement
/// y' = x + e, e ~ N(0, sigma_e^2/n I).
struct SubspaceModel {
    int n = 0;               ///< ambient dimension
    int d = 0;               ///< subspace dimension
    Eigen::MatrixXd basis;   ///< n x d, orthonormal columns
    double sigma_z = 0.0;    ///< input noise level
    double sigma_e = 0.0;    ///< target noise level

    static SubspaceModel make(int n, int d, double sigma_z, double sigma_e,
                              std::uint64_t basis_seed);

    /// A copy of this model with a different target noise level. The basis is
    /// shared, so sigma_e arms of a sweep see the same subspace.
    SubspaceModel with_sigma_e(double new_sigma_e) const;

    /// Throws std::invalid_argument when dimensions or noise levels are bad or
    /// the basis is not orthonormal to 1e-10.
    void validate() const;
};

/// Orthonormalizes a seeded standard-Gaussian n x d matrix (Householder QR
/// with the R diagonal forced positive, so the result is deterministic).
Eigen::MatrixXd random_orthonormal_basis(int n, int d, std::uint64_t seed);

struct SamplePair {
    Eigen::VectorXd x;        ///< clean signal
    Eigen::VectorXd y;        ///< input measurement x + z
    Eigen::VectorXd y_prime;  ///< target measurement x + e
};

struct Dataset {
    SubspaceModel model;
    std::uint64_t seed = 0;
    std::vector<SamplePair> pairs;

    int size() const { return static_cast<int>(pairs.size()); }
};

/// Draws one pair from the given stream. Draw order is fixed (c, then the
/// unit input noise, then the unit target noise), so datasets built from
/// per-pair substreams are reproducible and nested.
SamplePair sample_pair(const SubspaceModel& model, GaussianStream& stream);

/// The pair a dataset with this seed stores at position `pair_index`.
SamplePair sample_pair_at(const SubspaceModel& model, std::uint64_t seed,
                          std::int64_t pair_index);

Dataset make_dataset(const SubspaceModel& model, int n_pairs, std::uint64_t seed);

/// Datasets of the given (strictly increasing) sizes; smaller ones are exact
/// prefixes of larger ones.
std::vector<Dataset> generate_nested_datasets(const SubspaceModel& model,
                                              const std::vector<int>& sizes,
                                              std::uint64_t seed);

/// Columnar sampling for the Monte Carlo estimators: fills columns of X, Y
/// and the *unit* target noise E_unit (y' = x + sigma_e/sqrt(n) * e_unit)
/// with pairs first_index, first_index+1, ... from the same per-pair
/// substreams make_dataset uses. All three matrices must be n x B.
void sample_block(const SubspaceModel& model, std::uint64_t seed,
                  std::int64_t first_index, Eigen::Ref<Eigen::MatrixXd> x,
                  Eigen::Ref<Eigen::MatrixXd> y,
                  Eigen::Ref<Eigen::MatrixXd> e_unit);

}  // namespace ssrecon
