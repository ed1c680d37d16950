#include "edgetune/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace edgetune {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double improvement_pct(const ResultRow& row) {
    return (row.default_plt_ms - row.plt_ms) / row.default_plt_ms * 100.0;
}

double distance_from_optimal(const ResultRow& row) {
    return (row.plt_ms - row.optimal_plt_ms) / row.optimal_plt_ms;
}

Report build_report(const std::vector<ResultRow>& rows,
                    std::int64_t update_interval_ms) {
    if (rows.empty()) throw std::invalid_argument("report: no result rows");
    if (update_interval_ms <= 0)
        throw std::invalid_argument("report: update interval must be > 0");

    Report report;
    report.row_count = static_cast<long>(rows.size());

    std::vector<double> improvements, realized, defaults;
    improvements.reserve(rows.size());
    for (const auto& r : rows) {
        improvements.push_back(improvement_pct(r));
        realized.push_back(r.plt_ms);
        defaults.push_back(r.default_plt_ms);
    }
    for (int q : {10, 25, 50, 75, 90, 95, 99})
        report.improvement_percentiles[q] = percentile(improvements, q);

    std::vector<double> sorted = improvements;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t step = std::max<std::size_t>(1, sorted.size() / 512);
    for (std::size_t i = 0; i < sorted.size(); i += step)
        report.cdf.emplace_back(sorted[i],
                                static_cast<double>(i + 1) / sorted.size());
    report.cdf.emplace_back(sorted.back(), 1.0);

    report.median_level_improvement =
        1.0 - percentile(realized, 50) / percentile(defaults, 50);
    report.p95_level_improvement =
        1.0 - percentile(realized, 95) / percentile(defaults, 95);

    // per-update-bucket convergence and arm mix
    std::map<int, std::vector<double>> by_bucket;
    std::int64_t max_ts = 0;
    for (const auto& r : rows) {
        const int bucket = static_cast<int>(r.ts_ms / update_interval_ms);
        by_bucket[bucket].push_back(distance_from_optimal(r));
        max_ts = std::max(max_ts, r.ts_ms);
    }
    for (auto& [bucket, dists] : by_bucket)
        report.convergence.emplace_back(bucket, percentile(dists, 50));

    const int buckets = static_cast<int>(max_ts / update_interval_ms) + 1;
    std::vector<std::int64_t> edges;
    for (int b = 0; b <= buckets; ++b) edges.push_back(b * update_interval_ms);
    std::vector<std::pair<std::int64_t, std::string>> tagged;
    tagged.reserve(rows.size());
    for (const auto& r : rows) tagged.emplace_back(r.ts_ms, r.arm);
    report.arm_fractions = arm_contributions(tagged, edges);
    return report;
}

namespace {

void write_svg_polyline(const std::string& path,
                        const std::vector<std::pair<double, double>>& points,
                        const std::string& x_label,
                        const std::string& y_label) {
    if (points.empty()) return;
    double xmin = points[0].first, xmax = points[0].first;
    double ymin = points[0].second, ymax = points[0].second;
    for (const auto& [x, y] : points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double w = 640, h = 400, margin = 50;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
        << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' "
           "points='";
    for (const auto& [x, y] : points) {
        const double px = margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin);
        const double py =
            h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin);
        out << px << "," << py << " ";
    }
    out << "'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - 10
        << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
    out << "<text x='15' y='" << h / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 15 "
        << h / 2 << ")'>" << y_label << "</text>\n";
    out << "</svg>\n";
}

}  // namespace

void write_report(const std::string& prefix, const Report& report, bool svg) {
    {
        std::ofstream out(prefix + "_percentiles.csv");
        if (!out)
            throw std::runtime_error("cannot open for write: " + prefix +
                                     "_percentiles.csv");
        out << "percentile,improvement_pct\n";
        for (const auto& [q, v] : report.improvement_percentiles)
            out << "p" << q << "," << v << "\n";
        out << "level_p50," << report.median_level_improvement * 100.0 << "\n";
        out << "level_p95," << report.p95_level_improvement * 100.0 << "\n";
    }
    {
        std::ofstream out(prefix + "_cdf.csv");
        out << "improvement_pct,cum_fraction\n";
        for (const auto& [x, y] : report.cdf) out << x << "," << y << "\n";
    }
    {
        std::ofstream out(prefix + "_convergence.csv");
        out << "update_bucket,median_distance_from_optimal\n";
        for (const auto& [b, d] : report.convergence) out << b << "," << d << "\n";
    }
    {
        std::ofstream out(prefix + "_arms.csv");
        out << "update_bucket";
        for (const auto& [arm, fractions] : report.arm_fractions)
            out << "," << arm;
        out << "\n";
        std::size_t buckets = 0;
        for (const auto& [arm, fractions] : report.arm_fractions)
            buckets = std::max(buckets, fractions.size());
        for (std::size_t b = 0; b < buckets; ++b) {
            out << b;
            for (const auto& [arm, fractions] : report.arm_fractions)
                out << "," << (b < fractions.size() ? fractions[b] : 0.0);
            out << "\n";
        }
    }
    if (svg) {
        write_svg_polyline(prefix + "_cdf.svg", report.cdf,
                           "improvement over default (%)", "CDF");
        std::vector<std::pair<double, double>> conv;
        for (const auto& [b, d] : report.convergence)
            conv.emplace_back(static_cast<double>(b), d);
        write_svg_polyline(prefix + "_convergence.svg", conv, "model update",
                           "median distance from optimal");
    }
}

}  // namespace edgetune
