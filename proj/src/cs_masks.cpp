#include "ssrecon/cs_masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ssrecon/errors.hpp"

namespace ssrecon {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Unbiased bounded draw in [0, bound).
std::uint64_t bounded_rand(Xoshiro256pp& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

double uniform01(Xoshiro256pp& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Moves a uniform without-replacement sample of size k to the front of
/// values[0..count).
void partial_shuffle(std::vector<int>& values, int count, int k, Xoshiro256pp& rng) {
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(bounded_rand(rng, count - i));
        std::swap(values[i], values[j]);
    }
}

/// floor(s) + Bernoulli(frac(s)) so the subset size has expectation exactly s.
int dithered_size(double s, Xoshiro256pp& rng) {
    const double fl = std::floor(s);
    int size = static_cast<int>(fl);
    if (uniform01(rng) < s - fl) ++size;
    return size;
}

}  // namespace

std::pair<double, double> derived_fractions(double nu, double p, double mu) {
    if (!(nu > 0 && nu < p && p < mu && mu <= 1))
        throw std::invalid_argument("invalid scheme: require 0 < nu < p < mu <= 1");
    const double p_prime = (p - nu) / (1.0 - nu);
    const double q = (mu - p) / (1.0 - p);
    return {p_prime, q};
}

CsScheme::CsScheme(int n_freq_, double nu_, double p_, double mu_)
    : n_freq(n_freq_), nu(nu_), p(p_), mu(mu_) {
    if (n_freq < 1) throw std::invalid_argument("n_freq must be positive");
    std::tie(p_prime, q) = derived_fractions(nu, p, mu);
}

SchemeCounts SchemeCounts::from_scheme(const CsScheme& scheme) {
    SchemeCounts c;
    const int n = scheme.n_freq;
    c.center = static_cast<int>(std::llround(scheme.nu * n));
    if (c.center < 1)
        throw std::invalid_argument("invalid scheme: center block is empty (nu * n_freq < 1)");
    c.non_center = n - c.center;
    if (c.non_center == 0) return c;  // degenerate all-center scheme

    c.tilde_nc = static_cast<int>(std::llround(scheme.mu * n)) - c.center;
    c.input_nc = static_cast<int>(std::llround(scheme.p * n)) - c.center;
    c.remaining_nc = c.tilde_nc - c.input_nc;
    if (c.input_nc < 1 || c.remaining_nc < 1 || c.tilde_nc > c.non_center)
        throw std::invalid_argument(
            "invalid scheme: fraction rounding leaves an empty mask block (center=" +
            std::to_string(c.center) + ", input_nc=" + std::to_string(c.input_nc) +
            ", tilde_nc=" + std::to_string(c.tilde_nc) + " of " +
            std::to_string(c.non_center) + " non-center columns)");
    return c;
}

MaskSplit build_split(const CsScheme& scheme, Xoshiro256pp& rng) {
    const int n = scheme.n_freq;
    const SchemeCounts counts = SchemeCounts::from_scheme(scheme);

    MaskSplit split;
    split.center_count = counts.center;
    split.center_begin = (n - counts.center) / 2;
    split.m_tilde.assign(n, 0);
    split.m_input.assign(n, 0);
    split.m_target.assign(n, 0);
    for (int j = split.center_begin; j < split.center_begin + counts.center; ++j)
        split.m_tilde[j] = split.m_input[j] = split.m_target[j] = 1;

    split.inclusion_prob = VectorXd::Constant(n, scheme.q);
    split.weights = VectorXd::Constant(n, 1.0 / std::sqrt(scheme.q));
    for (int j = split.center_begin; j < split.center_begin + counts.center; ++j) {
        split.inclusion_prob(j) = 1.0;
        split.weights(j) = 1.0;
    }

    if (counts.non_center == 0) {
        split.inclusion_prob.setOnes();
        split.weights.setOnes();
        return split;
    }

    std::vector<int> idx(counts.non_center);
    int next = 0;
    for (int j = 0; j < n; ++j)
        if (!split.is_center(j)) idx[next++] = j;

    // The input mask is drawn first and its draw consumes a fixed amount of the
    // stream (it depends only on nu and p), so schemes that differ in mu alone
    // share input masks when given the same stream.
    partial_shuffle(idx, counts.non_center, counts.input_nc, rng);
    for (int i = 0; i < counts.input_nc; ++i) split.m_input[idx[i]] = 1;

    // Remaining acquired columns: a uniform subset of the complement, all
    // handed to the target.
    std::vector<int> complement(idx.begin() + counts.input_nc, idx.end());
    partial_shuffle(complement, static_cast<int>(complement.size()), counts.remaining_nc,
                    rng);
    for (int i = 0; i < counts.remaining_nc; ++i) {
        split.m_tilde[complement[i]] = 1;
        split.m_target[complement[i]] = 1;
    }
    for (int i = 0; i < counts.input_nc; ++i) split.m_tilde[idx[i]] = 1;

    // Overlap: a uniform subset of the input's non-center columns with expected
    // size q * input_nc, so every non-center column lands in m_target with
    // probability q.
    std::vector<int> input_picks(idx.begin(), idx.begin() + counts.input_nc);
    const int overlap = dithered_size(scheme.q * counts.input_nc, rng);
    partial_shuffle(input_picks, counts.input_nc, overlap, rng);
    for (int i = 0; i < overlap; ++i) split.m_target[input_picks[i]] = 1;

    return split;
}

Eigen::VectorXd weight_vector(const MaskSplit& split, const CsScheme& scheme) {
    if (!(scheme.q > 0))
        throw std::domain_error("q = 0 gives infinite weights on non-center columns");
    const int n = static_cast<int>(split.m_target.size());
    VectorXd w = VectorXd::Constant(n, 1.0 / std::sqrt(scheme.q));
    for (int j = 0; j < n; ++j)
        if (split.is_center(j)) w(j) = 1.0;
    return w;
}

Eigen::MatrixXcd unitary_dft_matrix(int n) {
    if (n < 1) throw std::invalid_argument("dft size must be positive");
    MatrixXcd f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double angle = -2.0 * M_PI * static_cast<double>(j) *
                                 static_cast<double>(k) / static_cast<double>(n);
            f(j, k) = std::polar(scale, angle);
        }
    }
    return f;
}

double ss_cs_loss(const VectorXcd& reconstruction, const VectorXcd& target,
                  const std::vector<std::uint8_t>& m_target, const VectorXd& weights,
                  const Eigen::MatrixXcd& dft) {
    const Eigen::Index n = reconstruction.size();
    if (target.size() != n || static_cast<Eigen::Index>(m_target.size()) != n ||
        weights.size() != n || dft.rows() != n || dft.cols() != n)
        throw std::invalid_argument("ss_cs_loss: length mismatch");
    const VectorXcd f_rec = dft * reconstruction;
    double loss = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!m_target[j]) continue;
        loss += weights(j) * weights(j) * std::norm(f_rec(j) - target(j));
    }
    return loss;
}

double prop2_exact_check(const VectorXcd& a, const VectorXcd& x,
                         const VectorXd& inclusion_prob, const Eigen::MatrixXcd& dft) {
    const Eigen::Index n = a.size();
    if (x.size() != n || inclusion_prob.size() != n || dft.rows() != n || dft.cols() != n)
        throw std::invalid_argument("prop2_exact_check: length mismatch");
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(inclusion_prob(j) > 0))
            throw std::domain_error("inclusion probability 0 leaves the weight undefined");

    const VectorXcd diff_hat = dft * (a - x);
    double expected = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w_sq = 1.0 / inclusion_prob(j);
        expected += w_sq * inclusion_prob(j) * std::norm(diff_hat(j));
    }
    return std::abs(expected - (a - x).squaredNorm());
}

CsSignalModel CsSignalModel::make(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 1 || d > n)
        throw std::invalid_argument("invalid dimensions for the CS signal model");
    GaussianStream g(substream(seed, stream_tag::kBasis));
    MatrixXcd raw(n, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) {
            const double re = g();
            const double im = g();
            raw(i, j) = std::complex<double>(re, im);
        }
    Eigen::HouseholderQR<MatrixXcd> qr(raw);
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(n, d);
    const MatrixXcd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
        const std::complex<double> rjj = r(j, j);
        if (std::abs(rjj) > 0) q.col(j) *= rjj / std::abs(rjj);
    }
    CsSignalModel model;
    model.n = n;
    model.d = d;
    model.basis = q;
    model.fourier_basis = unitary_dft_matrix(n) * q;
    return model;
}

CsBatch make_cs_batch(const CsSignalModel& model, const CsScheme& scheme, int count,
                      std::uint64_t seed, std::int64_t first_index) {
    if (count < 1) throw std::invalid_argument("batch size must be positive");
    if (scheme.n_freq != model.n)
        throw std::invalid_argument("scheme and signal model dimensions disagree");
    const int n = model.n;
    const int d = model.d;

    CsBatch batch;
    batch.x_hat.resize(n, count);
    batch.u_hat.resize(n, count);
    batch.target_hat.resize(n, count);
    batch.loss_weights.resize(n, count);

    const double scale = 1.0 / std::sqrt(2.0 * d);
    VectorXcd coeff(d);
    for (int i = 0; i < count; ++i) {
        const std::uint64_t index = static_cast<std::uint64_t>(first_index + i);
        GaussianStream g(substream(seed, stream_tag::kCsSignal, index));
        for (int k = 0; k < d; ++k) {
            const double re = g();
            const double im = g();
            coeff(k) = std::complex<double>(scale * re, scale * im);
        }
        batch.x_hat.col(i).noalias() = model.fourier_basis * coeff;

        Xoshiro256pp mask_rng = substream(seed, stream_tag::kMask, index);
        const MaskSplit split = build_split(scheme, mask_rng);
        for (int j = 0; j < n; ++j) {
            batch.u_hat(j, i) = split.m_input[j] ? batch.x_hat(j, i) : 0.0;
            batch.target_hat(j, i) = split.m_target[j] ? batch.x_hat(j, i) : 0.0;
            batch.loss_weights(j, i) =
                split.m_target[j] ? split.weights(j) * split.weights(j) : 0.0;
        }
    }
    return batch;
}

/// Rows of V decouple in the weighted objective: row j sees
/// A_j = (1/N) sum_i d_ij u_i u_i^H. Simultaneous power iteration over all
/// rows costs two matrix products per sweep.
double max_row_hessian_eigenvalue(const MatrixXcd& u_hat, const MatrixXd& weights,
                                  std::uint64_t seed) {
    const int n = static_cast<int>(u_hat.rows());
    const int count = static_cast<int>(u_hat.cols());
    GaussianStream g(substream(seed, stream_tag::kPowerIter));
    MatrixXcd v(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) v(i, j) = std::complex<double>(g(), g());
    v.colwise().normalize();

    const MatrixXcd weights_t = weights.transpose().cast<std::complex<double>>();
    MatrixXcd t, tw;
    Eigen::VectorXd rayleigh = Eigen::VectorXd::Zero(n);
    for (int sweep = 0; sweep < 14; ++sweep) {
        t.noalias() = u_hat.adjoint() * v;  // t(i, j) = u_i^H v_j
        tw = t.cwiseProduct(weights_t);     // d_ij u_i^H v_j
        // v_j^H A_j v_j = (1/N) sum_i d_ij |u_i^H v_j|^2 with the v_j from the
        // previous sweep (unit norm).
        rayleigh =
            t.conjugate().cwiseProduct(tw).colwise().sum().real().transpose() / count;
        v.noalias() = u_hat * tw / static_cast<double>(count);  // A_j v_j in column j
        for (int j = 0; j < n; ++j) {
            const double norm = v.col(j).norm();
            if (norm > 0) v.col(j) /= norm;
        }
    }
    return rayleigh.maxCoeff();
}

double cs_risk(const MatrixXcd& v, const CsBatch& batch) {
    return (v * batch.u_hat - batch.x_hat).squaredNorm() / batch.size();
}

CsTrainReport train_cs_linear(const CsSignalModel& model, const CsScheme& scheme,
                              int n_train, CsTrainMode mode, std::uint64_t seed,
                              const CsTrainOptions& options) {
    if (n_train < 1) throw std::invalid_argument("n_train must be positive");
    if (options.patience < 1) throw std::invalid_argument("patience must be >= 1");
    const int n = model.n;

    const CsBatch train = make_cs_batch(model, scheme, n_train, seed);
    const int val_size = options.validation_size > 0 ? options.validation_size
                                                     : std::max(50, n_train / 5);
    const std::uint64_t val_seed = substream(seed, stream_tag::kValidation)();
    const CsBatch validation = make_cs_batch(model, scheme, val_size, val_seed);

    const bool supervised = mode == CsTrainMode::Supervised;
    const MatrixXcd& train_targets = supervised ? train.x_hat : train.target_hat;
    const MatrixXcd& val_targets = supervised ? validation.x_hat : validation.target_hat;
    const MatrixXd train_weights =
        supervised ? MatrixXd::Ones(n, n_train) : train.loss_weights;
    const MatrixXd val_weights =
        supervised ? MatrixXd::Ones(n, val_size) : validation.loss_weights;
    const MatrixXcd train_weights_c = train_weights.cast<std::complex<double>>();

    auto loss = [](const MatrixXcd& v, const MatrixXcd& u, const MatrixXcd& t,
                   const MatrixXd& w) {
        return ((v * u - t).cwiseAbs2().array() * w.array()).sum() / u.cols();
    };

    const double lr =
        options.learning_rate > 0
            ? options.learning_rate
            : 0.45 / max_row_hessian_eigenvalue(train.u_hat, train_weights, seed);

    MatrixXcd v = MatrixXcd::Zero(n, n);
    CsTrainReport report;
    report.best_validation =
        loss(v, validation.u_hat, val_targets, val_weights);
    MatrixXcd best_v = v;
    int stall = 0;
    report.stop_reason = StopReason::MaxEpochs;

    MatrixXcd residual(n, n_train);
    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        residual.noalias() = v * train.u_hat;
        residual -= train_targets;
        residual = residual.cwiseProduct(train_weights_c);
        v.noalias() -= (2.0 * lr / n_train) * (residual * train.u_hat.adjoint());

        const double val = loss(v, validation.u_hat, val_targets, val_weights);
        if (!std::isfinite(val))
            throw DivergenceError("CS training diverged at epoch " + std::to_string(epoch),
                                  epoch);
        report.epochs = epoch;
        if (val < report.best_validation) {
            report.best_validation = val;
            best_v = v;
            report.best_epoch = epoch;
            stall = 0;
        } else if (val == report.best_validation) {
            stall = 0;
        } else if (++stall >= options.patience) {
            report.stop_reason = StopReason::EarlyStopped;
            break;
        }
    }
    report.v = std::move(best_v);
    return report;
}

CsOptimal cs_population_optimal(const CsSignalModel& model, const CsScheme& scheme) {
    if (scheme.n_freq != model.n)
        throw std::invalid_argument("scheme and signal model dimensions disagree");
    const int n = model.n;
    const SchemeCounts counts = SchemeCounts::from_scheme(scheme);
    const int center_begin = (n - counts.center) / 2;
    auto is_center = [&](int j) {
        return j >= center_begin && j < center_begin + counts.center;
    };

    const MatrixXcd s = model.fourier_basis * model.fourier_basis.adjoint() /
                        static_cast<double>(model.d);
    const double p1 = counts.non_center > 0
                          ? static_cast<double>(counts.input_nc) / counts.non_center
                          : 1.0;
    const double p2 = counts.non_center > 1
                          ? static_cast<double>(counts.input_nc) *
                                (counts.input_nc - 1) /
                                (static_cast<double>(counts.non_center) *
                                 (counts.non_center - 1))
                          : p1;

    MatrixXcd c_uu(n, n), c_xu(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const bool cj = is_center(j), ck = is_center(k);
            double both;
            if (cj && ck)
                both = 1.0;
            else if (cj || ck)
                both = p1;
            else
                both = (j == k) ? p1 : p2;
            c_uu(j, k) = s(j, k) * both;
            c_xu(j, k) = s(j, k) * (ck ? 1.0 : p1);
        }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(c_uu);
    const Eigen::VectorXd evals = eig.eigenvalues();
    const double tol = evals.maxCoeff() * 1e-12;
    Eigen::VectorXd inv = evals.unaryExpr([&](double v) { return v > tol ? 1.0 / v : 0.0; });
    const MatrixXcd pinv =
        eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().adjoint();

    CsOptimal out;
    out.v.noalias() = c_xu * pinv;
    const double quad = (out.v * c_uu * out.v.adjoint()).real().trace();
    const double cross = (out.v * c_xu.adjoint()).real().trace();
    out.risk = s.real().trace() - 2.0 * cross + quad;
    return out;
}

}  // namespace ssrecon
