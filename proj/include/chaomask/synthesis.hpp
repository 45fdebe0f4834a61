#pragma once

#include <optional>
#include <vector>

#include "chaomask/kernels.hpp"
#include "chaomask/models.hpp"

namespace chaomask {

/// Extended-observer gain together with the certificate (P, N = P L) of the
/// Lipschitz-observer LMI.
struct ObserverGain {
    Matrix L;
    Matrix P;
    Matrix N;
    double margin = 0.0;   ///< largest eigenvalue of the LMI block; < 0 when certified
    double ell_used = 0.0; ///< Lipschitz constant the certificate holds for
    double eta = 0.0;      ///< output-injection weight (N = eta C^T) when synthesized
    double eps = 0.0;      ///< strictness slack of the Riccati equality
};

struct FrequencySample {
    double w;
    double sigma_min;
};

struct UnobservabilityReport {
    double delta = 0.0;
    double w_star = 0.0;
    std::vector<FrequencySample> profile;
};

/// 10 (1 + |A|_F).
double default_w_max(const Matrix& a);

inline constexpr int kDefaultFrequencyGrid = 2000;

/// Coarse scan of sigma_min([jwI - A; C]) on [0, w_max] then golden-section
/// refinement around the grid minimum. Negative frequencies mirror positive
/// ones, so they are not scanned.
UnobservabilityReport distance_to_unobservability(const Matrix& a, const Matrix& c,
                                                  std::optional<double> w_max = std::nullopt,
                                                  int n_grid = kDefaultFrequencyGrid,
                                                  Execution exec = Execution::Parallel);

/// Sufficient (not necessary) condition for LMI feasibility: delta > ell.
bool check_sufficiency(const UnobservabilityReport& report, double ell);

/// [[P A + A^T P - N C - C^T N^T + E, P], [P, -ell^-2 I]]; for ell = 0 only
/// the upper-left block.
Matrix lmi_block(const ExtendedSystem& ext, const Matrix& p, const Matrix& n);

/// Largest eigenvalue of `lmi_block`. Throws DomainError unless P is
/// symmetric positive definite.
double verify_lmi(const ExtendedSystem& ext, const Matrix& p, const Matrix& n);

/// (A - L C)^T P + P (A - L C) + ell^2 P P + E, the Schur complement of the
/// LMI block with N = P L.
Matrix closed_loop_lmi(const ExtendedSystem& ext, const Matrix& p, const Matrix& l);

/// Output-injection weights and strictness slacks searched by synthesize_gain.
std::vector<double> synthesis_eta_grid();
std::vector<double> synthesis_eps_grid();

/// For each (eta, eps) solves
///   A^T P + P A + ell^2 P P - 2 eta C^T C + E + eps I = 0
/// for its maximal solution, sets N = eta C^T, L = P^-1 N and certifies the
/// LMI. Returns the certified gain with the most negative margin.
/// Throws InfeasibleSynthesis (carrying the best margin seen) otherwise.
ObserverGain synthesize_gain(const ExtendedSystem& ext, Execution exec = Execution::Parallel);

/// Searches P for a given L through
///   (A - L C)^T P + P (A - L C) + ell^2 P P + E + eps I = 0.
/// Throws GainNotCertified when no slack in the grid admits a certified P.
ObserverGain verify_gain(const ExtendedSystem& ext, const Matrix& l);

} // namespace chaomask
