#pragma once

#include <string>
#include <vector>

#include "pcreg/geometry.hpp"
#include "pcreg/synth.hpp"

namespace pcreg {

// Target registration error of one case: the predicted displacements are
// interpolated from the moving cloud to the moving landmarks with an
// isotropic Gaussian kernel (default sigma 5 mm) and compared against the
// fixed landmarks.
struct TreResult {
    std::vector<double> errors_mm;   // per landmark
    std::vector<Vec3> landmark_flow;  // interpolated displacement per landmark
    double mean_mm = 0.0;
};

TreResult tre(const RegistrationCase& c, const DisplacementField& phi, double sigma_mm = 5.0);

// Standard deviation of log |J| of the map x -> x + u(x) after rasterizing
// the sparse field onto a regular grid (central differences on interior
// voxels). Determinants <= 0 are clamped to 1e-6 and counted as foldings.
struct SdLogJResult {
    double sdlogj = 0.0;
    double mean_logj = 0.0;
    std::size_t folded_voxels = 0;
    std::size_t interior_voxels = 0;

    double folding_fraction() const {
        return interior_voxels ? static_cast<double>(folded_voxels) /
                                     static_cast<double>(interior_voxels)
                               : 0.0;
    }
};

SdLogJResult sdlogj(const RegistrationCase& c, const DisplacementField& phi,
                    double spacing_mm = 4.0, double sigma_mm = 5.0);

// The Jacobian statistics of an already rasterized field.
SdLogJResult sdlogj_of_grid(const VectorGrid& grid);

// Percentile with linear interpolation between closest ranks; q in [0, 1].
double percentile(std::vector<double> values, double q);

struct CaseEval {
    std::string case_id;
    std::vector<double> landmark_errors_mm;
    std::vector<Vec3> landmark_points;  // moving landmarks (for plotting)
    std::vector<Vec3> landmark_flow;
    double tre_mean_mm = 0.0;
    double sdlogj = 0.0;
    double folding_fraction = 0.0;
};

// Dataset-level aggregate: per-landmark errors pooled over all cases for the
// mean and the 25/75% percentiles; SDlogJ averaged per case.
struct EvalReport {
    double tre_mean_mm = 0.0;
    double tre_p25_mm = 0.0;
    double tre_p75_mm = 0.0;
    double sdlogj = 0.0;
    double folding_fraction = 0.0;
    std::vector<CaseEval> per_case;
};

EvalReport summarize(std::vector<CaseEval> cases);

}  // namespace pcreg
