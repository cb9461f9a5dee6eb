#include "nwp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "nwp/error.hpp"

namespace nwp {

namespace {

double cos_lat(double lat) {
    if (std::abs(lat) >= 90.0) return 0.0;
    return std::cos(lat * std::numbers::pi / 180.0);
}

void require_grid(const Field& f, const GridSpec& grid, std::string_view role) {
    if (!(f.grid() == grid))
        throw GridMismatchError(fmt::format("{} field {} is on {}, weights are on {}", role, channel_name(f.channel()),
                                            describe(f.grid()), describe(grid)));
}

}  // namespace

LatWeights::LatWeights(GridSpec grid, std::vector<std::size_t> points, std::vector<double> weights)
    : grid_(grid), points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.size() != weights_.size()) throw Error("weights and points differ in length");
}

std::vector<double> LatWeights::dense() const {
    std::vector<double> d(grid_.size(), 0.0);
    for (std::size_t k = 0; k < points_.size(); ++k) d[points_[k]] = weights_[k];
    return d;
}

LatWeights lat_weights(const GridSpec& grid, const Mask& mask) {
    if (!(mask.grid == grid) || mask.cells.size() != grid.size())
        throw GridMismatchError("mask grid differs from evaluation grid");
    std::vector<std::size_t> points;
    std::vector<double> w;
    for (std::size_t i = 0; i < grid.nlat; ++i) {
        const double c = cos_lat(grid_coords(grid, i, 0).lat);
        for (std::size_t j = 0; j < grid.nlon; ++j) {
            const std::size_t p = i * grid.nlon + j;
            if (!mask.cells[p]) continue;
            points.push_back(p);
            w.push_back(c);
        }
    }
    if (points.empty()) throw EmptyMaskError("region mask selects no grid points");
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0);
        total = static_cast<double>(w.size());
    }
    for (auto& x : w) x /= total;
    return LatWeights(grid, std::move(points), std::move(w));
}

double rmse_weighted(const Field& forecast, const Field& truth, const LatWeights& weights) {
    require_grid(forecast, weights.grid(), "forecast");
    require_grid(truth, weights.grid(), "truth");
    const auto f = forecast.values();
    const auto o = truth.values();
    const auto pts = weights.points();
    const auto w = weights.weights();
    double sum = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double d = static_cast<double>(f[pts[k]]) - static_cast<double>(o[pts[k]]);
        sum += w[k] * d * d;
    }
    return std::sqrt(sum);
}

double acc_from_anomalies(std::span<const double> af, std::span<const double> ao, std::span<const double> w) {
    if (af.size() != w.size() || ao.size() != w.size()) throw Error("anomaly and weight lengths differ");
    double cross = 0.0, var_f = 0.0, var_o = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        cross += w[k] * af[k] * ao[k];
        var_f += w[k] * af[k] * af[k];
        var_o += w[k] * ao[k] * ao[k];
    }
    if (var_f < kMinAnomalyVariance || var_o < kMinAnomalyVariance)
        throw DegenerateAnomalyError(
            fmt::format("degenerate anomaly: forecast variance {:.3g}, truth variance {:.3g}", var_f, var_o));
    return std::clamp(cross / std::sqrt(var_f * var_o), -1.0, 1.0);
}

double acc_weighted(const Field& forecast, const Field& truth, const Field& clim, const LatWeights& weights) {
    require_grid(forecast, weights.grid(), "forecast");
    require_grid(truth, weights.grid(), "truth");
    require_grid(clim, weights.grid(), "climatology");
    const auto f = forecast.values();
    const auto o = truth.values();
    const auto c = clim.values();
    const auto pts = weights.points();
    std::vector<double> af(pts.size()), ao(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        af[k] = static_cast<double>(f[pts[k]]) - static_cast<double>(c[pts[k]]);
        ao[k] = static_cast<double>(o[pts[k]]) - static_cast<double>(c[pts[k]]);
    }
    return acc_from_anomalies(af, ao, weights.weights());
}

// ---------------------------------------------------------------------------

std::string_view metric_name(Metric m) noexcept { return m == Metric::RMSE ? "RMSE" : "ACC"; }

Metric parse_metric(std::string_view text) {
    if (text == "RMSE") return Metric::RMSE;
    if (text == "ACC") return Metric::ACC;
    throw Error(fmt::format("unknown metric '{}'", text));
}

bool record_less(const MetricRecord& a, const MetricRecord& b) {
    const auto ka = state_channel_index(a.channel).flat();
    const auto kb = state_channel_index(b.channel).flat();
    return std::tie(a.source_label, ka, a.region, a.lead_hours, a.metric) <
           std::tie(b.source_label, kb, b.region, b.lead_hours, b.metric);
}

void sort_records(std::vector<MetricRecord>& records) { std::stable_sort(records.begin(), records.end(), record_less); }

std::vector<NamedRegion> default_regions() {
    return {{"global", RegionBox::global()}, {"east_asia", RegionBox::east_asia()}};
}

Evaluation evaluate_run(std::span<const LeadState> forecasts, const std::map<int, StateSet>& truths,
                        const StateSet& climatology, std::span<const NamedRegion> regions,
                        std::span<const ChannelId> report_channels) {
    Evaluation result;
    if (forecasts.empty()) return result;
    climatology.require_canonical();
    const GridSpec& grid = climatology.grid();

    std::vector<LatWeights> weights;
    weights.reserve(regions.size());
    for (const auto& r : regions) weights.push_back(lat_weights(grid, region_mask(grid, r.box)));

    for (const auto& fc : forecasts) {
        const auto init_time = fc.state.valid_time() - std::chrono::hours{fc.lead_hours};
        try {
            fc.state.require_canonical();
            auto it = truths.find(fc.lead_hours);
            if (it == truths.end()) throw Error(fmt::format("no truth state for lead {} h", fc.lead_hours));
            const StateSet& truth = it->second;
            truth.require_canonical();
            if (!(fc.state.grid() == grid) || !(truth.grid() == grid))
                throw GridMismatchError(fmt::format("lead {} h: forecast/truth grid differs from climatology grid {}",
                                                    fc.lead_hours, describe(grid)));

            std::vector<MetricRecord> lead_records;
            for (const auto& ch : report_channels) {
                const Field& f = fc.state.channel(ch);
                const Field& o = truth.channel(ch);
                const Field& c = climatology.channel(ch);
                for (std::size_t r = 0; r < regions.size(); ++r) {
                    MetricRecord rec{init_time, fc.state.source_label(), ch, regions[r].name, fc.lead_hours,
                                     Metric::RMSE, rmse_weighted(f, o, weights[r])};
                    lead_records.push_back(rec);
                    try {
                        rec.metric = Metric::ACC;
                        rec.value = acc_weighted(f, o, c, weights[r]);
                        lead_records.push_back(rec);
                    } catch (const DegenerateAnomalyError& e) {
                        result.errors.push_back({fc.lead_hours, fmt::format("{} {}: {}", channel_name(ch),
                                                                            regions[r].name, e.what())});
                    }
                }
            }
            result.records.insert(result.records.end(), lead_records.begin(), lead_records.end());
        } catch (const Error& e) {
            result.errors.push_back({fc.lead_hours, e.what()});
        }
    }
    sort_records(result.records);
    return result;
}

}  // namespace nwp
