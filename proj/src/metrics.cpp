#include "pcreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcreg {

TreResult tre(const RegistrationCase& c, const DisplacementField& phi, double sigma_mm) {
    if (!c.landmarks_moving || !c.landmarks_fixed)
        throw std::invalid_argument("tre: case has no landmarks");
    if (phi.size() != c.moving.size()) throw std::invalid_argument("tre: |phi| != |moving|");

    const PointCloud& lm = *c.landmarks_moving;
    const PointCloud& lf = *c.landmarks_fixed;
    const DisplacementField flow = gaussian_interpolate(c.moving, phi, lm, sigma_mm);

    TreResult out;
    out.errors_mm.reserve(lm.size());
    out.landmark_flow = flow.vectors();
    double acc = 0.0;
    for (std::size_t i = 0; i < lm.size(); ++i) {
        const double err = norm(lm[i] + flow[i] - lf[i]);
        out.errors_mm.push_back(err);
        acc += err;
    }
    out.mean_mm = acc / static_cast<double>(lm.size());
    return out;
}

SdLogJResult sdlogj(const RegistrationCase& c, const DisplacementField& phi, double spacing_mm,
                    double sigma_mm) {
    if (phi.size() != c.moving.size()) throw std::invalid_argument("sdlogj: |phi| != |moving|");
    if (spacing_mm <= 0.0) throw std::invalid_argument("sdlogj: spacing must be > 0");
    return sdlogj_of_grid(rasterize_displacement(c.moving, phi, spacing_mm, sigma_mm));
}

SdLogJResult sdlogj_of_grid(const VectorGrid& grid) {
    for (int a = 0; a < 3; ++a) {
        if (grid.dims[a] < 3)
            throw std::invalid_argument("sdlogj: grid needs >= 3 voxels per axis");
    }

    const double inv_2h = 1.0 / (2.0 * grid.spacing);
    std::vector<double> logj;
    logj.reserve(grid.voxel_count());
    SdLogJResult out;

    for (std::int64_t iz = 1; iz + 1 < grid.dims[2]; ++iz) {
        for (std::int64_t iy = 1; iy + 1 < grid.dims[1]; ++iy) {
            for (std::int64_t ix = 1; ix + 1 < grid.dims[0]; ++ix) {
                // J = I + du/dx, central differences per axis.
                double jac[3][3];
                const Vec3 gx = (grid.at(ix + 1, iy, iz) - grid.at(ix - 1, iy, iz)) * inv_2h;
                const Vec3 gy = (grid.at(ix, iy + 1, iz) - grid.at(ix, iy - 1, iz)) * inv_2h;
                const Vec3 gz = (grid.at(ix, iy, iz + 1) - grid.at(ix, iy, iz - 1)) * inv_2h;
                for (int r = 0; r < 3; ++r) {
                    jac[r][0] = gx[r];
                    jac[r][1] = gy[r];
                    jac[r][2] = gz[r];
                    jac[r][r] += 1.0;
                }
                double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                             jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                             jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
                if (det <= 0.0) {
                    det = 1e-6;
                    ++out.folded_voxels;
                }
                logj.push_back(std::log(det));
            }
        }
    }

    out.interior_voxels = logj.size();
    double mean = 0.0;
    for (double v : logj) mean += v;
    mean /= static_cast<double>(logj.size());
    double var = 0.0;
    for (double v : logj) var += (v - mean) * (v - mean);
    var /= static_cast<double>(logj.size());
    out.mean_logj = mean;
    out.sdlogj = std::sqrt(var);
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

EvalReport summarize(std::vector<CaseEval> cases) {
    if (cases.empty()) throw std::invalid_argument("summarize: no cases");
    EvalReport report;
    std::vector<double> pooled;
    double sd_acc = 0.0;
    double fold_acc = 0.0;
    for (const CaseEval& c : cases) {
        pooled.insert(pooled.end(), c.landmark_errors_mm.begin(), c.landmark_errors_mm.end());
        sd_acc += c.sdlogj;
        fold_acc += c.folding_fraction;
    }
    if (pooled.empty()) throw std::invalid_argument("summarize: cases carry no landmark errors");
    double mean = 0.0;
    for (double e : pooled) mean += e;
    report.tre_mean_mm = mean / static_cast<double>(pooled.size());
    report.tre_p25_mm = percentile(pooled, 0.25);
    report.tre_p75_mm = percentile(pooled, 0.75);
    report.sdlogj = sd_acc / static_cast<double>(cases.size());
    report.folding_fraction = fold_acc / static_cast<double>(cases.size());
    report.per_case = std::move(cases);
    return report;
}

}  // namespace pcreg
