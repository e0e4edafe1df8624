#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "ssrecon/rng.hpp"
#include "ssrecon/training.hpp"

namespace ssrecon {

/// p' = (p - nu)/(1 - nu), q = (mu - p)/(1 - p). Requires nu < p < mu <= 1;
/// mu = 1 is the fully-sampled-target limit with q = 1.
std::pair<double, double> derived_fractions(double nu, double p, double mu);

/// Fractions of the k-space measurement-splitting scheme: a center fraction nu
/// of columns is always acquired and shared, the input mask keeps a fraction p
/// and the full acquisition a fraction mu.
struct CsScheme {
    int n_freq = 0;
    double nu = 0;
    double p = 0;
    double mu = 0;
    double p_prime = 0;
    double q = 0;

    CsScheme(int n_freq, double nu, double p, double mu);
};

/// Integer column counts the splitter actually uses (round-to-nearest with
/// nonempty-block guards).
struct SchemeCounts {
    int center = 0;        ///< always-on center columns
    int non_center = 0;    ///< everything else
    int tilde_nc = 0;      ///< non-center columns in the acquisition m_tilde
    int input_nc = 0;      ///< non-center columns in m_input
    int remaining_nc = 0;  ///< tilde_nc - input_nc, handed to m_target

    static SchemeCounts from_scheme(const CsScheme& scheme);
};

struct MaskSplit {
    std::vector<std::uint8_t> m_tilde;   ///< acquired frequencies
    std::vector<std::uint8_t> m_input;   ///< mask M
    std::vector<std::uint8_t> m_target;  ///< mask M'
    Eigen::VectorXd inclusion_prob;      ///< P(frequency in m_target)
    Eigen::VectorXd weights;             ///< E[M']^(-1/2): 1 center, 1/sqrt(q) otherwise
    int center_begin = 0;
    int center_count = 0;

    bool is_center(int j) const {
        return j >= center_begin && j < center_begin + center_count;
    }
};

/// Draws one measurement split. The center block is deterministic and shared;
/// m_input adds a uniform subset of non-center columns; m_target gets the
/// acquired columns m_input left out plus an overlap sample of m_input's
/// non-center columns whose expected size is q * |non-center(m_input)|
/// (= p'q * |all non-center|), so each non-center frequency lands in m_target
/// with probability q.
MaskSplit build_split(const CsScheme& scheme, Xoshiro256pp& rng);

/// The loss weight mask E[M']^(-1/2): 1 at center columns, 1/sqrt(q)
/// elsewhere. Throws std::domain_error when q == 0.
Eigen::VectorXd weight_vector(const MaskSplit& split, const CsScheme& scheme);

/// Unitary DFT matrix, F_jk = exp(-2 pi i j k / n) / sqrt(n).
Eigen::MatrixXcd unitary_dft_matrix(int n);

/// Weighted masked-Fourier self-supervised loss:
/// sum_j m'_j w_j^2 |(F rec)_j - target_j|^2.
double ss_cs_loss(const Eigen::VectorXcd& reconstruction, const Eigen::VectorXcd& target,
                  const std::vector<std::uint8_t>& m_target,
                  const Eigen::VectorXd& weights, const Eigen::MatrixXcd& dft);

/// Evaluates the Bernoulli-mask expectation of the weighted masked loss
/// analytically and returns |E_M' loss - ||a - x||^2|. Zero inclusion
/// probabilities have undefined weights and throw std::domain_error.
double prop2_exact_check(const Eigen::VectorXcd& a, const Eigen::VectorXcd& x,
                         const Eigen::VectorXd& inclusion_prob,
                         const Eigen::MatrixXcd& dft);

/// Complex subspace signal generator for the desk-scale compressive-sensing
/// analog: x = U c with complex orthonormal U and c circular Gaussian with
/// E|c_k|^2 = 1/d.
struct CsSignalModel {
    int n = 0;
    int d = 0;
    Eigen::MatrixXcd basis;          ///< n x d orthonormal (spatial domain)
    Eigen::MatrixXcd fourier_basis;  ///< F * basis

    static CsSignalModel make(int n, int d, std::uint64_t seed);
};

/// A batch of samples, kept in the Fourier domain throughout (the DFT is
/// unitary, so risks agree with the image domain).
struct CsBatch {
    Eigen::MatrixXcd x_hat;       ///< F x, one column per sample
    Eigen::MatrixXcd u_hat;       ///< M F x (zero-filled input)
    Eigen::MatrixXcd target_hat;  ///< M' F x
    Eigen::MatrixXd loss_weights; ///< m'_j w_j^2 per (row j, sample)

    int size() const { return static_cast<int>(x_hat.cols()); }
};

/// Samples `count` (signal, split) pairs with per-sample substreams starting
/// at `first_index`. The input-mask draw consumes the same stream prefix for
/// every mu, so schemes differing only in mu share signals and input masks.
CsBatch make_cs_batch(const CsSignalModel& model, const CsScheme& scheme, int count,
                      std::uint64_t seed, std::int64_t first_index = 0);

enum class CsTrainMode { Supervised, SelfSupervised };

struct CsTrainOptions {
    double learning_rate = 0;  ///< <= 0 selects one from a stability estimate
    int patience = 10;
    int max_epochs = 600;
    int validation_size = 0;   ///< 0 = max(50, N/5)
};

struct CsTrainReport {
    Eigen::MatrixXcd v;  ///< Fourier-domain reconstructor; W = F^H V F
    std::int64_t epochs = 0;
    StopReason stop_reason = StopReason::MaxEpochs;
    double best_validation = 0;
    std::int64_t best_epoch = 0;
};

/// Trains the linear reconstructor by full-batch gradient descent on the
/// supervised loss mean ||V u - x||^2 or the weighted self-supervised loss,
/// early-stopped on a held-out validation set of the same kind.
CsTrainReport train_cs_linear(const CsSignalModel& model, const CsScheme& scheme,
                              int n_train, CsTrainMode mode, std::uint64_t seed,
                              const CsTrainOptions& options = {});

/// mean_i ||V u_i - x_i||^2 over a batch (clean-target risk).
double cs_risk(const Eigen::MatrixXcd& v, const CsBatch& batch);

/// Largest row-block Hessian eigenvalue of the weighted least-squares
/// objective (1/N) sum_i sum_j d_ij |(V u_i)_j - t_ij|^2, estimated by
/// simultaneous power iteration over the rows; 1/lambda is the gradient
/// descent stability limit.
double max_row_hessian_eigenvalue(const Eigen::MatrixXcd& u_hat,
                                  const Eigen::MatrixXd& weights, std::uint64_t seed);

struct CsOptimal {
    Eigen::MatrixXcd v;
    double risk = 0;
};

/// Population-optimal complex-linear reconstructor for the scheme's input-mask
/// distribution, from the analytic second moments of (x_hat, u_hat).
CsOptimal cs_population_optimal(const CsSignalModel& model, const CsScheme& scheme);

}  // namespace ssrecon
