#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsepick/spectra_model.hpp"

namespace sparsepick {

enum class InitStrategy {
    SampledSpectra,  ///< atoms are data columns plus small jitter
    RandomCentered,  ///< zero-mean uniform noise scaled to the norm bound
    RandomMixture,   ///< random convex combinations of the data columns
    LeadingSingular, ///< left singular vectors of X, then random atoms past the rank
};

std::string to_string(InitStrategy init);
InitStrategy init_strategy_from_string(const std::string& name);

/// Parameters of the elastic-net dictionary learning problem
///   min_{B,S} 1/2 ||X - BS||_F^2 + alpha sum_j ||S_j||_1 + beta sum_j ||S_j||_2^2
///   s.t. ||B_j||_2^2 <= C.
struct HyperParams {
    double alpha = 1.0;
    double beta = 1e-10;
    double norm_bound = 100.0;
    /// Dictionary size K; 0 selects min(L, 2R).
    Index num_atoms = 0;
    int max_iters = 200;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    /// Atoms unused for this many consecutive iterations are re-seeded; 0 disables.
    int dead_atom_patience = 5;
    InitStrategy init = InitStrategy::LeadingSingular;

    /// Throws InvalidParameter unless alpha >= 0, beta > 0, C > 0, rel_tol > 0, max_iters >= 1.
    void validate() const;
    /// Throws InvalidParameter when the requested K is outside [1, L].
    Index resolve_num_atoms(Index length, Index count) const;
};

struct FitResult {
    Dictionary dictionary;
    CodeMatrix codes;
    std::vector<double> objective_history;
    std::vector<Index> active_set;
    int iterations_run = 0;
    bool converged = false;
    int reseeded_atoms = 0;
    /// Columns whose active-set system had to be ridge-damped in the last code step.
    std::vector<Index> damped_columns;
};

/// 1/2 ||X - BS||_F^2 + alpha ||S||_1 + beta ||S||_F^2.
double objective(const Matrix& spectra, const Dictionary& dictionary, const CodeMatrix& codes, double alpha,
                 double beta);
double objective(const SpectraMatrix& spectra, const Dictionary& dictionary, const CodeMatrix& codes,
                 double alpha, double beta);

/// Squared Frobenius residual ||X - BS||_F^2.
double residual(const Matrix& spectra, const Matrix& atoms, const Matrix& codes);

/// Exact minimizer of 1/2 s'Hs - c's + alpha ||s||_1 for positive definite H,
/// found with a feature-sign active-set search. Sets `damped` when an active
/// subsystem was numerically singular and had to be ridge-damped.
Vector solve_elastic_net(const Matrix& hessian, const Vector& correlation, double alpha, bool* damped = nullptr);

struct SolveDiagnostics {
    std::vector<Index> damped_columns;
};

/// Per-column exact elastic-net codes for a fixed dictionary.
CodeMatrix solve_codes(const Matrix& spectra, const Dictionary& dictionary, double alpha, double beta,
                       int jobs = 1, SolveDiagnostics* diagnostics = nullptr);

/// Largest violation of the elastic-net optimality conditions for column r,
/// measured on g = B'(x - Bs) - 2 beta s.
double kkt_violation(const Vector& x, const Matrix& atoms, const Vector& s, double alpha, double beta);

/// Norm-constrained least squares min ||X - BS||_F^2 s.t. ||B_j||^2 <= C,
/// solved through the Lagrange dual of the column constraints. Atoms whose
/// code row is all zero are taken from `previous` (re-projected) or set to zero.
Dictionary update_basis(const Matrix& spectra, const CodeMatrix& codes, double norm_bound);
Dictionary update_basis(const Matrix& spectra, const CodeMatrix& codes, double norm_bound,
                        const Dictionary& previous);

/// Seeded starting dictionary for `fit`.
Dictionary initial_dictionary(const Matrix& spectra, const HyperParams& hp);

/// Alternates solve_codes and update_basis until the relative objective
/// decrease drops below rel_tol or max_iters is reached.
FitResult fit(const SpectraMatrix& spectra, const HyperParams& hp, int jobs = 1);

/// Rows of S holding an entry with magnitude above kActivityEps.
std::vector<Index> active_atoms(const CodeMatrix& codes);

}  // namespace sparsepick
