#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "gmsolve/field.hpp"

namespace gmsolve {

/// (sum |v|^p * cell_measure)^(1/p) over interior nodes.
double lp_norm(const ScalarField& v, double p);
/// Same for per-slot values (interior slot order).
double lp_norm(const DomainGrid& grid, const std::vector<double>& per_slot, double p);

/// ||u||_p + || |D_h u| ||_p + || |D2_h u|_F ||_p; needs p > 2.
double w2p_norm(const ScalarField& u, double p);

/// max |u(a) - u(b)| / |a - b| over axis neighbours, including the short
/// arms that end on the curved boundary.
double lipschitz_seminorm(const ScalarField& u);
/// sup |u| + Lipschitz seminorm.
double lipschitz_norm(const ScalarField& u);

struct HolderReport {
    double value = 0.0;               // max over all evaluated pairs
    std::vector<double> per_seed;     // sampled runs, empty when exhaustive
    bool exhaustive = false;
    std::size_t pairs = 0;
};

/// max |D_h u(x) - D_h u(y)| / |x - y|^alpha over interior node pairs:
/// every pair for n <= 65, otherwise `samples` random pairs for each seed
/// plus every pair of a coarse sub-lattice.
HolderReport holder_gradient(const ScalarField& u, double alpha, std::size_t samples = 100000,
                             std::vector<std::uint64_t> seeds = {1, 2});

enum class BallMode {
    Interior,  // only balls contained in the domain
    Clipped,   // every grid-centred ball, averaged over B cap Omega
};

/// 2h, 4h, ... up to 1/4.
std::vector<double> default_radii(const DomainGrid& grid);

/// sup over grid-centred balls of (mean |v - mean v|^p)^(1/p), means
/// weighted by cell measure. `components` values per slot are treated as
/// one vector (Frobenius deviation for matrix fields).
double pbmo_seminorm(const DomainGrid& grid, const std::vector<double>& per_slot, int components, double p,
                     const std::vector<double>& radii, BallMode mode = BallMode::Interior);
double pbmo_seminorm(const ScalarField& v, double p, const std::vector<double>& radii = {},
                     BallMode mode = BallMode::Interior);
/// The Hessian field with entries (xx, sqrt(2) xy, yy), so the Euclidean
/// deviation equals the Frobenius deviation.
std::vector<double> hessian_components(const ScalarField& u);
double pbmo_hessian(const ScalarField& u, double p, const std::vector<double>& radii = {},
                    BallMode mode = BallMode::Interior);

struct AprioriRatios {
    double ratio_w2p = 0.0;
    double ratio_bmo = 0.0;
    double w2p_u = 0.0, w2p_denominator = 0.0;
    double bmo_u = 0.0, bmo_denominator = 0.0;
};

/// psi must be sampled over the whole closed domain (not only its trace),
/// since its W2p and p-BMO norms enter the denominators.
AprioriRatios apriori_ratios(const ScalarField& u, const ScalarField& psi, const ScalarField& f,
                             const ScalarField& g_u, double p, const std::vector<double>& radii = {});

struct NormReport {
    double lp = 0.0;
    double w2p = 0.0;
    double lip = 0.0;
    double holder_grad = 0.0;
    double pbmo_d2 = 0.0;
    double pbmo_d2_clipped = 0.0;
    std::optional<AprioriRatios> apriori;
    double p = 4.0;
    double alpha = 0.5;
};

NormReport norm_report(const ScalarField& u, double p, double alpha, const std::vector<double>& radii = {});
nlohmann::json to_json(const NormReport& r);

}  // namespace gmsolve
