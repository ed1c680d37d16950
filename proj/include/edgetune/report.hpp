#pragma once

#include "edgetune/harness.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace edgetune {

/// Linear-interpolation percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Percent improvement over default, (default - realized) / default * 100.
double improvement_pct(const ResultRow& row);

/// Distance from optimal, (realized - optimal) / optimal.
double distance_from_optimal(const ResultRow& row);

struct Report {
    std::map<int, double> improvement_percentiles;  // {10,25,50,75,90,95,99}
    std::vector<std::pair<double, double>> cdf;     // improvement, cum. frac.
    /// Per model-update bucket median of distance-from-optimal.
    std::vector<std::pair<int, double>> convergence;
    std::map<std::string, std::vector<double>> arm_fractions;  // per bucket
    /// Quantile-level improvements: 1 - q(realized)/q(default).
    double median_level_improvement = 0.0;
    double p95_level_improvement = 0.0;
    long row_count = 0;
};

Report build_report(const std::vector<ResultRow>& rows,
                    std::int64_t update_interval_ms);

/// Writes <prefix>_percentiles.csv, _cdf.csv, _convergence.csv, _arms.csv
/// and optionally matching SVG plots.
void write_report(const std::string& prefix, const Report& report,
                  bool svg = false);

}  // namespace edgetune
