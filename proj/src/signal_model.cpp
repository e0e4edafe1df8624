#include "ssrecon/signal_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssrecon {

namespace {

void check_dims(int n, int d) {
    if (n < 1 || d < 1 || d > n) {
        throw std::invalid_argument("invalid dimensions: require 1 <= d <= n, got n=" +
                                    std::to_string(n) + " d=" + std::to_string(d));
    }
}

}  // namespace

Eigen::MatrixXd random_orthonormal_basis(int n, int d, std::uint64_t seed) {
    check_dims(n, d);
    GaussianStream g(substream(seed, stream_tag::kBasis));
    Eigen::MatrixXd raw(n, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) raw(i, j) = g();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
    // Fix the sign convention so the basis is a deterministic function of the
    // seed (QR is only unique up to column signs).
    Eigen::MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

SubspaceModel SubspaceModel::make(int n, int d, double sigma_z, double sigma_e,
                                  std::uint64_t basis_seed) {
    SubspaceModel model;
    model.n = n;
    model.d = d;
    model.basis = random_orthonormal_basis(n, d, basis_seed);
    model.sigma_z = sigma_z;
    model.sigma_e = sigma_e;
    model.validate();
    return model;
}

SubspaceModel SubspaceModel::with_sigma_e(double new_sigma_e) const {
    SubspaceModel copy = *this;
    copy.sigma_e = new_sigma_e;
    return copy;
}

void SubspaceModel::validate() const {
    check_dims(n, d);
    if (sigma_z < 0 || sigma_e < 0)
        throw std::invalid_argument("noise levels must be nonnegative");
    if (basis.rows() != n || basis.cols() != d)
        throw std::invalid_argument("basis has wrong shape");
    const double gram_err =
        (basis.transpose() * basis - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (gram_err > 1e-10)
        throw std::invalid_argument("basis columns are not orthonormal (max deviation " +
                                    std::to_string(gram_err) + ")");
}

SamplePair sample_pair(const SubspaceModel& model, GaussianStream& stream) {
    const int n = model.n;
    const int d = model.d;
    // Scales are applied per draw, exactly as sample_block does, so the two
    // paths produce bitwise-identical pairs.
    const double c_scale = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i) c(i) = c_scale * stream();

    SamplePair pair;
    pair.x.noalias() = model.basis * c;
    pair.y = pair.x;
    pair.y_prime = pair.x;

    const double z_scale = model.sigma_z / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) pair.y(i) += z_scale * stream();
    const double e_scale = model.sigma_e / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) pair.y_prime(i) += e_scale * stream();
    return pair;
}

SamplePair sample_pair_at(const SubspaceModel& model, std::uint64_t seed,
                          std::int64_t pair_index) {
    GaussianStream stream(
        substream(seed, stream_tag::kPair, static_cast<std::uint64_t>(pair_index)));
    return sample_pair(model, stream);
}

Dataset make_dataset(const SubspaceModel& model, int n_pairs, std::uint64_t seed) {
    model.validate();
    if (n_pairs < 1) throw std::invalid_argument("dataset size must be positive");
    Dataset ds;
    ds.model = model;
    ds.seed = seed;
    ds.pairs.reserve(n_pairs);
    for (int i = 0; i < n_pairs; ++i) ds.pairs.push_back(sample_pair_at(model, seed, i));
    return ds;
}

std::vector<Dataset> generate_nested_datasets(const SubspaceModel& model,
                                              const std::vector<int>& sizes,
                                              std::uint64_t seed) {
    if (sizes.empty()) throw std::invalid_argument("sizes list must not be empty");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw std::invalid_argument("dataset sizes must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("sizes must be strictly increasing");
    }
    std::vector<Dataset> out;
    out.reserve(sizes.size());
    for (int size : sizes) out.push_back(make_dataset(model, size, seed));
    return out;
}

void sample_block(const SubspaceModel& model, std::uint64_t seed,
                  std::int64_t first_index, Eigen::Ref<Eigen::MatrixXd> x,
                  Eigen::Ref<Eigen::MatrixXd> y, Eigen::Ref<Eigen::MatrixXd> e_unit) {
    const int n = model.n;
    const int d = model.d;
    const Eigen::Index cols = x.cols();
    if (x.rows() != n || y.rows() != n || e_unit.rows() != n || y.cols() != cols ||
        e_unit.cols() != cols)
        throw std::invalid_argument("sample_block: output shapes disagree");

    const double c_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double z_scale = model.sigma_z / std::sqrt(static_cast<double>(n));
    Eigen::VectorXd coeff(d);
    for (Eigen::Index j = 0; j < cols; ++j) {
        GaussianStream stream(substream(
            seed, stream_tag::kPair, static_cast<std::uint64_t>(first_index + j)));
        for (int i = 0; i < d; ++i) coeff(i) = c_scale * stream();
        // Same matrix-vector expression as sample_pair, so columns match the
        // stored dataset pairs bitwise.
        x.col(j).noalias() = model.basis * coeff;
        for (int i = 0; i < n; ++i) y(i, j) = x(i, j) + z_scale * stream();
        for (int i = 0; i < n; ++i) e_unit(i, j) = stream();
    }
}

}  // namespace ssrecon
